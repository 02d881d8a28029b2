// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tracebayes Authors

#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace tracebayes {

/// Porter stemmer (reference C implementation semantics). Expects a
/// lowercase alphabetic word; anything else is returned unchanged.
std::string porter_stem(std::string_view word);

bool is_stop_word(std::string_view word);

/// camelCase/underscore split, lowercase, drop non-alphabetic characters,
/// remove stop words, stem. Stems are iterated to a fixed point and filtered
/// again so that running the pipeline on its own joined output is a no-op.
/// Tokens shorter than two characters are dropped.
std::vector<std::string> preprocess_text(std::string_view raw);

}  // namespace tracebayes
