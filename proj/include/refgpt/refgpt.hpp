#pragma once

// Umbrella header for the reference-grounded dialogue synthesis library.
// The HTTP transport (http_transport.hpp) is not included here so that
// consumers without a network path never pay for cpp-httplib.

#include "refgpt/client.hpp"
#include "refgpt/common.hpp"
#include "refgpt/config.hpp"
#include "refgpt/eval.hpp"
#include "refgpt/hash.hpp"
#include "refgpt/parser.hpp"
#include "refgpt/pipeline.hpp"
#include "refgpt/plan.hpp"
#include "refgpt/postprocess.hpp"
#include "refgpt/prompt.hpp"
#include "refgpt/prompt_types.hpp"
#include "refgpt/reference.hpp"
#include "refgpt/rng.hpp"
#include "refgpt/scenario_prompts.hpp"
#include "refgpt/stats.hpp"
