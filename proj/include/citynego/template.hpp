// Copyright 2026 The citynego Authors
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

#include <map>
#include <stdexcept>
#include <string>
#include <string_view>

namespace citynego {

class TemplateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Substitutes {name} placeholders. A placeholder without a value is an
/// error; "{{" and "}}" produce literal braces.
inline std::string fill_template(std::string_view text,
                                 const std::map<std::string, std::string>& values) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '{' && i + 1 < text.size() && text[i + 1] == '{') {
      out.push_back('{');
      ++i;
    } else if (c == '}' && i + 1 < text.size() && text[i + 1] == '}') {
      out.push_back('}');
      ++i;
    } else if (c == '{') {
      const auto close = text.find('}', i);
      if (close == std::string_view::npos) throw TemplateError("unterminated placeholder");
      const std::string name(text.substr(i + 1, close - i - 1));
      const auto it = values.find(name);
      if (it == values.end()) throw TemplateError("missing value for placeholder {" + name + "}");
      out += it->second;
      i = close;
    } else {
      out.push_back(c);
    }
  }
  return out;
}

}  // namespace citynego
