// Copyright 2026 The dgmkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "dgm/distribution.hpp"

#include <algorithm>
#include <cctype>

namespace dgm {

namespace {

std::string join(const std::vector<std::string>& names) {
  std::string out;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (i) out += ',';
    out += names[i];
  }
  return out;
}

}  // namespace

Index batch_size(const SampleMap& map) {
  if (map.empty()) throw ShapeError("batch_size: empty sample map");
  Index batch = -1;
  std::string first;
  for (const auto& [name, t] : map) {
    if (t.rank() == 0) throw ShapeError("sample map entry '" + name + "' has no batch dimension");
    if (batch < 0) {
      batch = t.shape()[0];
      first = name;
    } else if (t.shape()[0] != batch) {
      throw ShapeError("batch size conflict: '" + first + "' has " + std::to_string(batch) + " rows, '" + name +
                       "' has " + std::to_string(t.shape()[0]));
    }
  }
  return batch;
}

void validate_var_name(const std::string& name) {
  if (name.empty()) throw ConfigError("variable name must be nonempty");
  for (char c : name) {
    if (std::isspace(static_cast<unsigned char>(c)) || c == '|' || c == ',' || c == '=') {
      throw ConfigError("invalid character in variable name '" + name + "'");
    }
  }
}

DistSpec::DistSpec(std::string symbol_, std::vector<std::string> var_, std::vector<std::string> cond_var_)
    : symbol(std::move(symbol_)), var(std::move(var_)), cond_var(std::move(cond_var_)) {
  if (symbol.empty()) throw ConfigError("distribution symbol must be nonempty");
  if (var.empty()) throw ConfigError("distribution must define at least one variable");
  auto check_unique = [](const std::vector<std::string>& names, const char* what) {
    for (std::size_t i = 0; i < names.size(); ++i) {
      validate_var_name(names[i]);
      if (std::find(names.begin(), names.begin() + static_cast<std::ptrdiff_t>(i), names[i]) !=
          names.begin() + static_cast<std::ptrdiff_t>(i)) {
        throw ConfigError(std::string("duplicate ") + what + " '" + names[i] + "'");
      }
    }
  };
  check_unique(var, "variable");
  check_unique(cond_var, "conditioning variable");
  for (const auto& v : var) {
    if (std::find(cond_var.begin(), cond_var.end(), v) != cond_var.end()) {
      throw ConfigError("variable '" + v + "' is both defined and conditioned on");
    }
  }
}

std::string DistSpec::atom() const {
  std::string out = symbol + "(" + join(var);
  if (!cond_var.empty()) out += "|" + join(cond_var);
  return out + ")";
}

SampleMap Distribution::conditions(const SampleMap& input) const {
  SampleMap out;
  std::vector<std::string> missing;
  for (const auto& name : cond_var()) {
    auto it = input.find(name);
    if (it == input.end()) {
      missing.push_back(name);
    } else {
      out.emplace(name, it->second);
    }
  }
  if (!missing.empty()) throw MissingVariable(std::move(missing));
  return out;
}

Index Distribution::resolve_batch(const SampleMap& input, Index batch_n) const {
  if (input.empty()) {
    if (batch_n < 1) throw ShapeError("sample: batch size must be positive");
    return batch_n;
  }
  const Index batch = batch_size(input);
  if (batch_n != batch) {
    throw ShapeError("sample: requested batch " + std::to_string(batch_n) + " but input has " +
                     std::to_string(batch) + " rows");
  }
  return batch;
}

Tensor Distribution::event_matrix(const SampleMap& values, const std::string& name, Index batch) {
  auto it = values.find(name);
  if (it == values.end()) throw MissingVariable({name});
  Tensor m = flatten_batch(it->second);
  if (m.shape()[0] != batch) {
    throw ShapeError("variable '" + name + "' has " + std::to_string(m.shape()[0]) + " rows, expected " +
                     std::to_string(batch));
  }
  return m;
}

SampleMap sample(const Distribution& dist, const SampleMap& input, Index batch_n, Session& session) {
  return dist.sample(input, batch_n, session.recording(), session);
}

SampleMap sample(const Distribution& dist, const SampleMap& input, Index batch_n, Rng& rng) {
  Session session(rng, false);
  return dist.sample(input, batch_n, false, session);
}

Tensor get_log_prob(const Distribution& dist, const SampleMap& values, Session& session) {
  return dist.log_prob(values, session);
}

Tensor get_log_prob(const Distribution& dist, const SampleMap& values) {
  Rng rng(0);
  Session session(rng, false);
  return dist.log_prob(values, session);
}

}  // namespace dgm
