// Copyright 2026 The kmstat Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "kmstat/survival.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "kmstat/errors.hpp"
#include "kmstat/kernels.hpp"

namespace kmstat {

CensoredSample sort_censored(std::vector<CensoredObservation> raw) {
  if (raw.empty()) throw EmptySample("sort_censored: empty observation list");
  for (const auto& obs : raw) {
    if (!(obs.time > 0.0))
      throw NonPositiveTime("sort_censored: observation times must be > 0");
  }
  std::stable_sort(raw.begin(), raw.end(),
                   [](const CensoredObservation& a, const CensoredObservation& b) {
                     if (a.time != b.time) return a.time < b.time;
                     return a.event && !b.event;
                   });
  CensoredSample sample;
  sample.observations_ = std::move(raw);
  for (const auto& obs : sample.observations_)
    if (obs.event) ++sample.event_count_;
  return sample;
}

KaplanMeierFit::KaplanMeierFit(CensoredSample sample)
    : sample_(std::move(sample)) {
  const auto& obs = sample_.observations();
  const std::size_t n = obs.size();
  weights_.resize(n);
  cumulative_.resize(n);
  // W_i = (Delta_i / n) * prod_{j<i} (1 + (1 - Delta_j) / (n - j)),
  // accumulated as a running product so censoring never divides by the
  // survival curve (no 0/0 once the curve hits zero).
  double running = 1.0;
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    weights_[i] = obs[i].event ? running / static_cast<double>(n) : 0.0;
    total += weights_[i];
    cumulative_[i] = total;
    const std::size_t remaining = n - (i + 1);
    if (!obs[i].event && remaining > 0)
      running *= 1.0 + 1.0 / static_cast<double>(remaining);
  }
  total_mass_ = total;
}

double KaplanMeierFit::cdf(double t) const {
  const auto& obs = sample_.observations();
  // First index with time > t; the cumulative weight just before it is F(t).
  auto it = std::upper_bound(
      obs.begin(), obs.end(), t,
      [](double value, const CensoredObservation& o) { return value < o.time; });
  if (it == obs.begin()) return 0.0;
  return cumulative_[static_cast<std::size_t>(it - obs.begin()) - 1];
}

std::size_t at_risk(const CensoredSample& sample, double t) {
  if (!(t > 0.0)) throw NonPositiveTime("at_risk: t must be > 0");
  const auto& obs = sample.observations();
  auto it = std::lower_bound(
      obs.begin(), obs.end(), t,
      [](const CensoredObservation& o, double value) { return o.time < value; });
  return static_cast<std::size_t>(obs.end() - it);
}

double diagonal_term(const KaplanMeierFit& fit, const Kernel& kernel) {
  const auto& obs = fit.sample().observations();
  const auto& w = fit.weights();
  double sum = 0.0;
  for (std::size_t i = 0; i < obs.size(); ++i) {
    if (w[i] == 0.0) continue;
    sum += kernel(obs[i].time, obs[i].time) * w[i] * w[i];
  }
  return sum;
}

namespace {

std::string trim(const std::string& s) {
  auto begin = s.find_first_not_of(" \t\r");
  auto end = s.find_last_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  return s.substr(begin, end - begin + 1);
}

}  // namespace

CensoredSample read_censored_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line))
    throw ParseError("line 1: missing 'time,event' header");
  ++line_no;
  {
    std::string header = trim(line);
    header.erase(std::remove(header.begin(), header.end(), ' '), header.end());
    if (header != "time,event")
      throw ParseError("line 1: expected header 'time,event', got '" +
                       trim(line) + "'");
  }
  std::vector<CensoredObservation> raw;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string row = trim(line);
    if (row.empty()) continue;
    const auto comma = row.find(',');
    if (comma == std::string::npos)
      throw ParseError("line " + std::to_string(line_no) +
                       ": expected 'time,event'");
    const std::string time_field = trim(row.substr(0, comma));
    const std::string event_field = trim(row.substr(comma + 1));
    double time = 0.0;
    try {
      std::size_t used = 0;
      time = std::stod(time_field, &used);
      if (used != time_field.size()) throw std::invalid_argument(time_field);
    } catch (const std::exception&) {
      throw ParseError("line " + std::to_string(line_no) +
                       ": cannot parse time '" + time_field + "'");
    }
    if (!(time > 0.0) || !std::isfinite(time))
      throw ParseError("line " + std::to_string(line_no) +
                       ": time must be a positive finite number");
    bool event = false;
    if (event_field == "1") {
      event = true;
    } else if (event_field == "0") {
      event = false;
    } else {
      throw ParseError("line " + std::to_string(line_no) +
                       ": event must be 0 or 1, got '" + event_field + "'");
    }
    raw.push_back({time, event});
  }
  if (raw.empty()) throw EmptySample("CSV contains no data rows");
  return sort_censored(std::move(raw));
}

CensoredSample read_censored_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  return read_censored_csv(in);
}

}  // namespace kmstat
