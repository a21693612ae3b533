#pragma once

#include "screc/backend.hpp"
#include "screc/catalog.hpp"
#include "screc/corpus.hpp"
#include "screc/dialogue.hpp"
#include "screc/error.hpp"
#include "screc/inference.hpp"
#include "screc/metrics.hpp"
#include "screc/mock_backend.hpp"
#include "screc/pipeline.hpp"
#include "screc/remote_backend.hpp"
#include "screc/retrieval.hpp"
#include "screc/transition.hpp"
#include "screc/util.hpp"
#include "screc/world.hpp"
