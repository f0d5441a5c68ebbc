// Copyright 2026 The rnmpc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef RNMPC_RNMPC_HPP_
#define RNMPC_RNMPC_HPP_

#include <rnmpc/atlas.hpp>
#include <rnmpc/controller.hpp>
#include <rnmpc/core.hpp>
#include <rnmpc/ellipsoid.hpp>
#include <rnmpc/json_util.hpp>
#include <rnmpc/model.hpp>
#include <rnmpc/ocp.hpp>
#include <rnmpc/qp.hpp>
#include <rnmpc/sqp.hpp>

#endif  // RNMPC_RNMPC_HPP_
