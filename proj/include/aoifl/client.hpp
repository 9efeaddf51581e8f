// Copyright 2026 The aoifl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "aoifl/dataset.hpp"

namespace aoifl {

/// Per-client system parameters plus the client's training shard. The shard
/// is attached after partitioning; bandwidth and dropout are sampled once per
/// run and never change.
struct ClientProfile {
  double bandwidth_mbps = 0.0;
  double dropout_prob = 0.0;
  bool malicious = false;
  ClientShard shard;
};

}  // namespace aoifl
