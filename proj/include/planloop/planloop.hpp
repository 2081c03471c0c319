#pragma once

#include "planloop/bench.hpp"
#include "planloop/chaincheck.hpp"
#include "planloop/gateway.hpp"
#include "planloop/oracle.hpp"
#include "planloop/orchestrator.hpp"
#include "planloop/parser.hpp"
#include "planloop/primitives.hpp"
#include "planloop/prompts.hpp"
#include "planloop/taskgen.hpp"
#include "planloop/transcript.hpp"
#include "planloop/util.hpp"
#include "planloop/world.hpp"
