// Copyright 2026 The chaosbft Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <memory>

#include "chaosbft/engine/clique.hpp"
#include "chaosbft/engine/engine.hpp"
#include "chaosbft/engine/pbft.hpp"
#include "chaosbft/engine/raft.hpp"

namespace chaosbft {

inline std::unique_ptr<Engine> make_engine(Protocol p, EngineContext ctx) {
  switch (p) {
    case Protocol::Pbft: return std::make_unique<PbftEngine>(std::move(ctx));
    case Protocol::Raft: return std::make_unique<RaftEngine>(std::move(ctx));
    case Protocol::Clique: return std::make_unique<CliqueEngine>(std::move(ctx));
  }
  return nullptr;
}

}  // namespace chaosbft
