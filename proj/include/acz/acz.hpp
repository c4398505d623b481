#pragma once

#include "acz/comb.hpp"
#include "acz/config.hpp"
#include "acz/error.hpp"
#include "acz/estimation.hpp"
#include "acz/experiment.hpp"
#include "acz/io.hpp"
#include "acz/least_squares.hpp"
#include "acz/lowpass.hpp"
#include "acz/measurement.hpp"
#include "acz/oracle.hpp"
#include "acz/parallel.hpp"
#include "acz/pulse_sequences.hpp"
#include "acz/sensitivity.hpp"
#include "acz/signal_model.hpp"
#include "acz/spin_dynamics.hpp"
#include "acz/t2_scaling.hpp"
#include "acz/version.hpp"
