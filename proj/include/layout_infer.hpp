#ifndef LAYOUT_INFER_HPP
#define LAYOUT_INFER_HPP

#include "layout_infer/csv.hpp"
#include "layout_infer/data_ingest.hpp"
#include "layout_infer/diagnostics.hpp"
#include "layout_infer/fit.hpp"
#include "layout_infer/layout_model.hpp"
#include "layout_infer/pipeline.hpp"
#include "layout_infer/predict_assess.hpp"
#include "layout_infer/preprocess.hpp"
#include "layout_infer/rng.hpp"
#include "layout_infer/sampler.hpp"
#include "layout_infer/special.hpp"
#include "layout_infer/synthetic.hpp"

#endif  // LAYOUT_INFER_HPP
