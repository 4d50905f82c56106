#pragma once

// Umbrella header for the rolerail library: role-based access control for
// retrieval-augmented generation pipelines.

#include "rolerail/config.hpp"
#include "rolerail/embedding.hpp"
#include "rolerail/errors.hpp"
#include "rolerail/eval.hpp"
#include "rolerail/gateway.hpp"
#include "rolerail/guardrails.hpp"
#include "rolerail/http_clients.hpp"
#include "rolerail/index.hpp"
#include "rolerail/llm.hpp"
#include "rolerail/pipeline.hpp"
#include "rolerail/policy.hpp"
#include "rolerail/responder.hpp"
#include "rolerail/text.hpp"
