// Convenience umbrella header.
#pragma once

#include "loopin/amm.hpp"
#include "loopin/economics.hpp"
#include "loopin/engine.hpp"
#include "loopin/errors.hpp"
#include "loopin/ledger.hpp"
#include "loopin/netsim.hpp"
#include "loopin/pocps.hpp"
#include "loopin/scenario.hpp"
#include "loopin/token.hpp"
