// Copyright 2026 The dgmkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "dgm/errors.hpp"

#include <iostream>

namespace dgm {

MissingVariable::MissingVariable(std::vector<std::string> names)
    : Error([&] {
        std::string msg = "missing variable(s):";
        for (const auto& n : names) msg += " " + n;
        return msg;
      }()),
      names_(std::move(names)) {}

void warn(const std::string& message) { std::cerr << "warning: " << message << '\n'; }

}  // namespace dgm
