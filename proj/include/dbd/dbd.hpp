#pragma once

#include "dbd/bridge.hpp"
#include "dbd/core.hpp"
#include "dbd/diffscore.hpp"
#include "dbd/embedding.hpp"
#include "dbd/embedding_file.hpp"
#include "dbd/ingest.hpp"
#include "dbd/manifest.hpp"
#include "dbd/metrics.hpp"
#include "dbd/model.hpp"
#include "dbd/pipeline.hpp"
#include "dbd/profiles.hpp"
#include "dbd/search.hpp"
#include "dbd/serialize.hpp"
#include "dbd/toy_model.hpp"
