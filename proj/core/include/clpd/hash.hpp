// Copyright 2026 The CLPD Authors.
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

#ifndef CLPD_HASH_HPP_
#define CLPD_HASH_HPP_

#include <filesystem>
#include <string>
#include <string_view>

namespace clpd {

// Lowercase hex SHA-256 of the bytes.
std::string sha256_hex(std::string_view bytes);

// SHA-256 of a file's contents; throws MissingArtifact if unreadable.
std::string sha256_file(const std::filesystem::path& path);

// First 16 hex digits, for cache keys and filenames.
inline std::string short_hash(const std::string& full) { return full.substr(0, 16); }

}  // namespace clpd

#endif  // CLPD_HASH_HPP_
