// Copyright 2026 The w2snn Authors
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

#include <string>
#include <utility>
#include <vector>

#include "w2snn/experiments.hpp"
#include "w2snn/locality.hpp"

namespace w2snn::io {

// Training data: header x_0,..,x_{n-1},y_0,..,y_{d-1}, one observation per
// row, full-precision floats.
void write_dataset_csv(const std::string& path, const locality::Dataset& data);
locality::Dataset read_dataset_csv(const std::string& path);

// Test ensembles: header point,draw,x_0,..,y_0,.. with k consecutive draws
// per test point.
void write_test_ensembles_csv(const std::string& path, const Eigen::MatrixXd& inputs,
                              const std::vector<Eigen::MatrixXd>& ensembles);
std::pair<Eigen::MatrixXd, std::vector<Eigen::MatrixXd>> read_test_ensembles_csv(
    const std::string& path);

// Trajectory ensembles: header traj,slice,t,comp_0,..,comp_95; slice 0 holds
// the initial state at t = 0.
void write_trajectory_csv(const std::string& path, const experiments::TrajectoryEnsemble& ens);
experiments::TrajectoryEnsemble read_trajectory_csv(const std::string& path);

}  // namespace w2snn::io
