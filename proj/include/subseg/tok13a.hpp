#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace subseg {

// mteval-13a-compatible tokenizer (the "tok.13a" of the BLEU signature).
// Case is preserved. When protect_breaks is set, literal "<eol>"/"<eob>"
// substrings survive as atomic tokens instead of being split on <, >.
std::vector<std::string> tokenize_13a(std::string_view text, bool protect_breaks = false);

}  // namespace subseg
