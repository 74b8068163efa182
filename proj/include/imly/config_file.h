// include/imly/config_file.h

// Copyright 2026  The imly Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef IMLY_CONFIG_FILE_H_
#define IMLY_CONFIG_FILE_H_

#include <map>
#include <string>
#include <string_view>

namespace imly {

using KeyValues = std::map<std::string, std::string>;

/// One `key = value` per line. Blank lines and lines starting with '#' are
/// skipped; surrounding whitespace is trimmed; a later key overrides an
/// earlier one. A line without '=' raises ConfigError.
KeyValues parse_key_values(const std::string& text);
KeyValues load_key_values_file(const std::string& path);

// Strict scalar parsing. Trailing garbage or an empty value raises
// ConfigError naming `key`.
double parse_double(std::string_view value, std::string_view key);
long long parse_int(std::string_view value, std::string_view key);
bool parse_bool(std::string_view value, std::string_view key);

}  // namespace imly

#endif  // IMLY_CONFIG_FILE_H_
