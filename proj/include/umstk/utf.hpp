// Copyright 2026 The umstk Authors
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

#pragma once

#include <string>
#include <string_view>

namespace umstk {

// UTF-8 <-> UTF-16 conversion for long file names. Malformed UTF-8 throws Error(kInvalidName);
// unpaired surrogates read from disk become U+FFFD.
std::u16string utf8_to_utf16(std::string_view in);
std::string utf16_to_utf8(std::u16string_view in);

}  // namespace umstk
