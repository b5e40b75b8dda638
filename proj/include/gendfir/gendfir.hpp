#pragma once

#include "gendfir/error.hpp"
#include "gendfir/utf8.hpp"
#include "gendfir/csv.hpp"
#include "gendfir/event_model.hpp"
#include "gendfir/chunker.hpp"
#include "gendfir/embedding.hpp"
#include "gendfir/http.hpp"
#include "gendfir/remote_embedder.hpp"
#include "gendfir/knowledge_base.hpp"
#include "gendfir/enrichment.hpp"
#include "gendfir/agent.hpp"
#include "gendfir/evaluation.hpp"
#include "gendfir/config.hpp"
