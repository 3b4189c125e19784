#pragma once

#include "pakcheck/rational.hpp"
#include "pakcheck/model.hpp"
#include "pakcheck/system.hpp"
#include "pakcheck/protocol.hpp"
#include "pakcheck/builtins.hpp"
#include "pakcheck/fact.hpp"
#include "pakcheck/belief.hpp"
#include "pakcheck/analysis.hpp"
#include "pakcheck/random.hpp"
#include "pakcheck/suite.hpp"
#include "pakcheck/io.hpp"
