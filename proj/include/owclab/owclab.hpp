#pragma once

#include "owclab/analysis.hpp"
#include "owclab/calibration.hpp"
#include "owclab/channel.hpp"
#include "owclab/commands.hpp"
#include "owclab/config.hpp"
#include "owclab/csv.hpp"
#include "owclab/dsp.hpp"
#include "owclab/fiber.hpp"
#include "owclab/loading.hpp"
#include "owclab/modem.hpp"
#include "owclab/ofdm_config.hpp"
#include "owclab/sweep.hpp"
