// Copyright Contributors to the recam Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "recam/runconfig.hpp"

namespace recam::cli {

void cmd_gen_data(const RunConfig& rc);
void cmd_train(const RunConfig& rc);
void cmd_sample(const RunConfig& rc);
void cmd_eval(const RunConfig& rc);
void cmd_ablate(const RunConfig& rc);
void cmd_render_debug(const RunConfig& rc);
void cmd_dump_splats(const RunConfig& rc);

}  // namespace recam::cli
