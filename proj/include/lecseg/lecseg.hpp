#pragma once

#include "lecseg/common.hpp"
#include "lecseg/corpus.hpp"
#include "lecseg/embedding.hpp"
#include "lecseg/evaluation.hpp"
#include "lecseg/fuse_annotate.hpp"
#include "lecseg/pipeline.hpp"
#include "lecseg/semantic_boundary.hpp"
#include "lecseg/slide_graph.hpp"
#include "lecseg/structural.hpp"
#include "lecseg/synthetic.hpp"
