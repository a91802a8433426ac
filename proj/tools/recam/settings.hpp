// Copyright Contributors to the recam Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <string>

#include "recam/curation.hpp"
#include "recam/evalkit.hpp"
#include "recam/pipeline.hpp"
#include "recam/runconfig.hpp"
#include "recam/trainkit.hpp"

namespace recam::cli {

/// Every key the CLI understands, with its default.
std::map<std::string, std::string> default_settings();

SceneParams scene_params(const RunConfig& rc);
RenderOptions render_options(const RunConfig& rc);
DatasetConfig dataset_config(const RunConfig& rc);
ModelConfig model_config(const RunConfig& rc);
TrainConfig train_config(const RunConfig& rc);
EvalConfig eval_config(const RunConfig& rc);
PipelineConfig pipeline_config(const RunConfig& rc);

}  // namespace recam::cli
