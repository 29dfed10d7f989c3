#pragma once

#include "stepplan/curation.hpp"
#include "stepplan/datagen.hpp"
#include "stepplan/decoder.hpp"
#include "stepplan/embodied.hpp"
#include "stepplan/error.hpp"
#include "stepplan/jsonl.hpp"
#include "stepplan/mock_world.hpp"
#include "stepplan/plan.hpp"
#include "stepplan/remote.hpp"
#include "stepplan/rng.hpp"
#include "stepplan/scorer.hpp"
#include "stepplan/server.hpp"
#include "stepplan/verifier_data.hpp"
#include "stepplan/wire.hpp"
