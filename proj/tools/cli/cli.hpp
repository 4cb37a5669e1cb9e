// Copyright (C) 2026 The finclass Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace finclass::cli {

/// Entry point shared by the `finclass` binary and the CLI tests. Returns the
/// process exit code; errors go to `err` prefixed with "<kind> error:".
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Parses flat `key=value` lines (blank lines and `#` comments ignored).
std::vector<std::pair<std::string, std::string>> parse_config_text(const std::string& text);

}  // namespace finclass::cli
