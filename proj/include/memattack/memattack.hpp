// Umbrella header.
#pragma once

#include "memattack/analysis.hpp"
#include "memattack/attacks.hpp"
#include "memattack/core.hpp"
#include "memattack/dataset.hpp"
#include "memattack/embedding.hpp"
#include "memattack/harness.hpp"
#include "memattack/http_backend.hpp"
#include "memattack/log.hpp"
#include "memattack/memory_store.hpp"
#include "memattack/metrics.hpp"
#include "memattack/prompt_templates.hpp"
#include "memattack/report.hpp"
#include "memattack/rng.hpp"
#include "memattack/text.hpp"
#include "memattack/victim.hpp"
