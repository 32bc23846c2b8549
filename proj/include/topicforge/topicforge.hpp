#pragma once

#include "topicforge/artifact.hpp"
#include "topicforge/corpus.hpp"
#include "topicforge/dataset.hpp"
#include "topicforge/error.hpp"
#include "topicforge/eval/classification.hpp"
#include "topicforge/eval/clustering.hpp"
#include "topicforge/eval/coherence.hpp"
#include "topicforge/eval/cooccurrence.hpp"
#include "topicforge/eval/diversity.hpp"
#include "topicforge/eval/evaluate.hpp"
#include "topicforge/eval/grouped.hpp"
#include "topicforge/eval/hierarchy.hpp"
#include "topicforge/eval/report.hpp"
#include "topicforge/models/dtm.hpp"
#include "topicforge/models/hlda.hpp"
#include "topicforge/models/lda.hpp"
#include "topicforge/models/nmf.hpp"
#include "topicforge/models/pltm.hpp"
#include "topicforge/pipeline.hpp"
#include "topicforge/run_config.hpp"
#include "topicforge/synthetic.hpp"
#include "topicforge/topics.hpp"
