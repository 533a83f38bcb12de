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

#include "w2snn/csv_io.hpp"

#include <sstream>

#include "w2snn/errors.hpp"
#include "w2snn/io_util.hpp"

namespace w2snn::io {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream ss(line);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  return out;
}

std::vector<std::vector<double>> read_rows(const std::string& path, const std::string& want_header,
                                           std::string* header_out = nullptr) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line)) throw IoError("csv '" + path + "': empty file");
  if (header_out) {
    *header_out = line;
  } else if (line != want_header) {
    throw IoError("csv '" + path + "': expected header '" + want_header + "', got '" + line + "'");
  }
  std::vector<std::vector<double>> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> row;
    for (const std::string& field : split_csv(line)) {
      try {
        row.push_back(std::stod(field));
      } catch (...) {
        throw IoError("csv '" + path + "' line " + std::to_string(lineno) + ": bad number '" +
                      field + "'");
      }
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw IoError("csv '" + path + "': no data rows");
  return rows;
}

int count_prefixed(const std::vector<std::string>& fields, const std::string& prefix, int from) {
  int n = 0;
  for (std::size_t i = static_cast<std::size_t>(from); i < fields.size(); ++i) {
    if (fields[i].rfind(prefix, 0) == 0) {
      ++n;
    } else {
      break;
    }
  }
  return n;
}

}  // namespace

void write_dataset_csv(const std::string& path, const locality::Dataset& data) {
  std::string out;
  for (Eigen::Index j = 0; j < data.xs.cols(); ++j) {
    out += (j ? ",x_" : "x_") + std::to_string(j);
  }
  for (Eigen::Index j = 0; j < data.ys.cols(); ++j) out += ",y_" + std::to_string(j);
  out += "\n";
  for (Eigen::Index i = 0; i < data.xs.rows(); ++i) {
    for (Eigen::Index j = 0; j < data.xs.cols(); ++j) {
      if (j) out += ",";
      out += format_double(data.xs(i, j));
    }
    for (Eigen::Index j = 0; j < data.ys.cols(); ++j) out += "," + format_double(data.ys(i, j));
    out += "\n";
  }
  atomic_write_file(path, out);
}

locality::Dataset read_dataset_csv(const std::string& path) {
  std::string header;
  const auto rows = read_rows(path, "", &header);
  const auto fields = split_csv(header);
  const int nx = count_prefixed(fields, "x_", 0);
  const int ny = count_prefixed(fields, "y_", nx);
  if (nx < 1 || ny < 1 || nx + ny != static_cast<int>(fields.size())) {
    throw IoError("csv '" + path + "': expected header x_0,..,y_0,.., got '" + header + "'");
  }
  locality::Dataset data;
  data.xs.resize(static_cast<Eigen::Index>(rows.size()), nx);
  data.ys.resize(static_cast<Eigen::Index>(rows.size()), ny);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (static_cast<int>(rows[i].size()) != nx + ny) {
      throw IoError("csv '" + path + "': row " + std::to_string(i + 2) + " has " +
                    std::to_string(rows[i].size()) + " fields, expected " +
                    std::to_string(nx + ny));
    }
    for (int j = 0; j < nx; ++j) data.xs(static_cast<Eigen::Index>(i), j) = rows[i][j];
    for (int j = 0; j < ny; ++j) {
      data.ys(static_cast<Eigen::Index>(i), j) = rows[i][static_cast<std::size_t>(nx + j)];
    }
  }
  return data;
}

void write_test_ensembles_csv(const std::string& path, const Eigen::MatrixXd& inputs,
                              const std::vector<Eigen::MatrixXd>& ensembles) {
  if (static_cast<std::size_t>(inputs.rows()) != ensembles.size() || ensembles.empty()) {
    throw DimensionError("test ensembles: one ensemble per input row required");
  }
  std::string out = "point,draw";
  for (Eigen::Index j = 0; j < inputs.cols(); ++j) out += ",x_" + std::to_string(j);
  for (Eigen::Index j = 0; j < ensembles[0].cols(); ++j) out += ",y_" + std::to_string(j);
  out += "\n";
  for (Eigen::Index p = 0; p < inputs.rows(); ++p) {
    const Eigen::MatrixXd& ens = ensembles[static_cast<std::size_t>(p)];
    for (Eigen::Index r = 0; r < ens.rows(); ++r) {
      out += std::to_string(p) + "," + std::to_string(r);
      for (Eigen::Index j = 0; j < inputs.cols(); ++j) out += "," + format_double(inputs(p, j));
      for (Eigen::Index j = 0; j < ens.cols(); ++j) out += "," + format_double(ens(r, j));
      out += "\n";
    }
  }
  atomic_write_file(path, out);
}

std::pair<Eigen::MatrixXd, std::vector<Eigen::MatrixXd>> read_test_ensembles_csv(
    const std::string& path) {
  std::string header;
  const auto rows = read_rows(path, "", &header);
  const auto fields = split_csv(header);
  if (fields.size() < 4 || fields[0] != "point" || fields[1] != "draw") {
    throw IoError("csv '" + path + "': expected header point,draw,x_0,..,y_0,..");
  }
  const int nx = count_prefixed(fields, "x_", 2);
  const int ny = count_prefixed(fields, "y_", 2 + nx);
  if (nx < 1 || ny < 1 || 2 + nx + ny != static_cast<int>(fields.size())) {
    throw IoError("csv '" + path + "': malformed ensemble header '" + header + "'");
  }
  int n_points = 0;
  for (const auto& row : rows) {
    n_points = std::max(n_points, static_cast<int>(row[0]) + 1);
  }
  Eigen::MatrixXd inputs(n_points, nx);
  std::vector<std::vector<std::vector<double>>> draws(static_cast<std::size_t>(n_points));
  for (const auto& row : rows) {
    const int p = static_cast<int>(row[0]);
    for (int j = 0; j < nx; ++j) inputs(p, j) = row[static_cast<std::size_t>(2 + j)];
    std::vector<double> y(static_cast<std::size_t>(ny));
    for (int j = 0; j < ny; ++j) y[static_cast<std::size_t>(j)] = row[static_cast<std::size_t>(2 + nx + j)];
    draws[static_cast<std::size_t>(p)].push_back(std::move(y));
  }
  std::vector<Eigen::MatrixXd> ensembles;
  for (int p = 0; p < n_points; ++p) {
    const auto& d = draws[static_cast<std::size_t>(p)];
    if (d.empty()) throw IoError("csv '" + path + "': test point " + std::to_string(p) + " has no draws");
    Eigen::MatrixXd ens(static_cast<Eigen::Index>(d.size()), ny);
    for (std::size_t r = 0; r < d.size(); ++r) {
      for (int j = 0; j < ny; ++j) ens(static_cast<Eigen::Index>(r), j) = d[r][static_cast<std::size_t>(j)];
    }
    ensembles.push_back(std::move(ens));
  }
  return {inputs, ensembles};
}

void write_trajectory_csv(const std::string& path, const experiments::TrajectoryEnsemble& ens) {
  std::string out = "traj,slice,t";
  const Eigen::Index dim = ens.initial.cols();
  for (Eigen::Index j = 0; j < dim; ++j) out += ",comp_" + std::to_string(j);
  out += "\n";
  for (Eigen::Index r = 0; r < ens.initial.rows(); ++r) {
    out += std::to_string(r) + ",0,0";
    for (Eigen::Index j = 0; j < dim; ++j) out += "," + format_double(ens.initial(r, j));
    out += "\n";
    for (std::size_t s = 0; s < ens.states.size(); ++s) {
      out += std::to_string(r) + "," + std::to_string(s + 1) + "," +
             format_double(ens.times(static_cast<Eigen::Index>(s)));
      for (Eigen::Index j = 0; j < dim; ++j) {
        out += "," + format_double(ens.states[s](r, j));
      }
      out += "\n";
    }
  }
  atomic_write_file(path, out);
}

experiments::TrajectoryEnsemble read_trajectory_csv(const std::string& path) {
  std::string header;
  const auto rows = read_rows(path, "", &header);
  const auto fields = split_csv(header);
  if (fields.size() < 4 || fields[0] != "traj" || fields[1] != "slice" || fields[2] != "t") {
    throw IoError("csv '" + path + "': expected header traj,slice,t,comp_0,..");
  }
  const int dim = static_cast<int>(fields.size()) - 3;
  int n_traj = 0;
  int n_slices = 0;
  for (const auto& row : rows) {
    n_traj = std::max(n_traj, static_cast<int>(row[0]) + 1);
    n_slices = std::max(n_slices, static_cast<int>(row[1]));
  }
  experiments::TrajectoryEnsemble ens;
  ens.initial.resize(n_traj, dim);
  ens.states.assign(static_cast<std::size_t>(n_slices), Eigen::MatrixXd(n_traj, dim));
  ens.times.resize(n_slices);
  for (const auto& row : rows) {
    const int r = static_cast<int>(row[0]);
    const int s = static_cast<int>(row[1]);
    if (s == 0) {
      for (int j = 0; j < dim; ++j) ens.initial(r, j) = row[static_cast<std::size_t>(3 + j)];
    } else {
      ens.times(s - 1) = row[2];
      for (int j = 0; j < dim; ++j) {
        ens.states[static_cast<std::size_t>(s - 1)](r, j) = row[static_cast<std::size_t>(3 + j)];
      }
    }
  }
  return ens;
}

}  // namespace w2snn::io
