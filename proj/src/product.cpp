// Copyright 2026 The dgmkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "dgm/product.hpp"

#include <algorithm>
#include <map>

namespace dgm {

namespace {

std::vector<DistPtr> flatten(std::vector<DistPtr> factors) {
  std::vector<DistPtr> out;
  for (auto& f : factors) {
    if (!f) throw ConfigError("product: null factor");
    if (auto p = std::dynamic_pointer_cast<const Product>(f)) {
      out.insert(out.end(), p->factors().begin(), p->factors().end());
    } else {
      out.push_back(std::move(f));
    }
  }
  return out;
}

bool contains(const std::vector<std::string>& names, const std::string& n) {
  return std::find(names.begin(), names.end(), n) != names.end();
}

DistSpec joint_spec(const std::vector<DistPtr>& factors, std::string symbol) {
  if (factors.empty()) throw ConfigError("product: needs at least one factor");
  std::vector<std::string> var, cond;
  for (const auto& f : factors) {
    for (const auto& v : f->var()) {
      if (contains(var, v)) throw GraphError("product: variable '" + v + "' is defined by more than one factor");
      var.push_back(v);
    }
  }
  for (const auto& f : factors) {
    for (const auto& c : f->cond_var()) {
      if (!contains(var, c) && !contains(cond, c)) cond.push_back(c);
    }
  }
  if (symbol.empty()) symbol = factors.front()->symbol();
  return DistSpec(std::move(symbol), std::move(var), std::move(cond));
}

std::vector<std::size_t> topological_order(const std::vector<DistPtr>& factors) {
  std::map<std::string, std::size_t> defined_by;
  for (std::size_t i = 0; i < factors.size(); ++i) {
    for (const auto& v : factors[i]->var()) defined_by[v] = i;
  }
  const std::size_t n = factors.size();
  std::vector<std::vector<std::size_t>> children(n);
  std::vector<std::size_t> indegree(n, 0);
  for (std::size_t j = 0; j < n; ++j) {
    std::vector<std::size_t> parents;
    for (const auto& c : factors[j]->cond_var()) {
      auto it = defined_by.find(c);
      if (it == defined_by.end()) continue;
      if (std::find(parents.begin(), parents.end(), it->second) == parents.end()) parents.push_back(it->second);
    }
    for (std::size_t i : parents) {
      children[i].push_back(j);
      ++indegree[j];
    }
  }
  std::vector<std::size_t> order;
  std::vector<bool> done(n, false);
  while (order.size() < n) {
    std::size_t next = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (!done[i] && indegree[i] == 0) {
        next = i;
        break;
      }
    }
    if (next == n) {
      std::string cycle;
      for (std::size_t i = 0; i < n; ++i) {
        if (!done[i]) cycle += " " + factors[i]->spec().atom();
      }
      throw GraphError("product: cyclic dependency among" + cycle);
    }
    done[next] = true;
    order.push_back(next);
    for (std::size_t c : children[next]) --indegree[c];
  }
  return order;
}

}  // namespace

Product::Product(std::vector<DistPtr> factors, std::string symbol)
    : Product(flatten(std::move(factors)), std::move(symbol), 0) {}

Product::Product(std::vector<DistPtr> flat, std::string symbol, int)
    : Distribution(joint_spec(flat, std::move(symbol))), factors_(std::move(flat)), order_(topological_order(factors_)) {}

std::vector<std::pair<std::string, std::vector<std::string>>> Product::graph() const {
  std::vector<std::pair<std::string, std::vector<std::string>>> out;
  for (std::size_t i : order_) {
    for (const auto& v : factors_[i]->var()) out.emplace_back(v, factors_[i]->cond_var());
  }
  return out;
}

SampleMap Product::sample(const SampleMap& input, Index batch_n, bool reparam, Session& session) const {
  conditions(input);
  const Index batch = resolve_batch(input, batch_n);
  SampleMap current = input;
  for (std::size_t i : order_) current = factors_[i]->sample(current, batch, reparam, session);
  return current;
}

Tensor Product::log_prob(const SampleMap& values, Session& session) const {
  Tensor total = factors_.front()->log_prob(values, session);
  for (std::size_t i = 1; i < factors_.size(); ++i) total = total + factors_[i]->log_prob(values, session);
  return total;
}

std::vector<std::string> Product::parameters() const {
  std::vector<std::string> names;
  for (const auto& f : factors_) {
    for (auto& n : f->parameters()) {
      if (!contains(names, n)) names.push_back(std::move(n));
    }
  }
  return names;
}

std::string Product::factorization(bool as_latex) const {
  std::string out = spec().atom() + " = ";
  for (const auto& f : factors_) out += as_latex ? f->latex() : f->text();
  return out;
}

std::string Product::text() const { return factorization(false); }
std::string Product::latex() const { return factorization(true); }

std::shared_ptr<const Product> product(std::vector<DistPtr> factors, std::string symbol) {
  return std::make_shared<const Product>(std::move(factors), std::move(symbol));
}

DistPtr operator*(const DistPtr& a, const DistPtr& b) { return product({a, b}); }

}  // namespace dgm
