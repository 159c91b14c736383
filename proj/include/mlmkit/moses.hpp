#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace mlmkit {

// Rule tokenizer in the Moses style, tuned for French:
//   - split on Unicode whitespace
//   - detach . , ! ? ; : « » ( ) [ ] " at word edges ('.' and ',' stay
//     attached between alphanumerics / digits respectively)
//   - elision apostrophes attach left and end the token (l'avion -> l' avion)
//   - in-word hyphens stay attached
//   - runs of 2+ dots form a single ellipsis token
//
// Re-tokenizing its own space-joined output is a fixpoint.
std::vector<std::string> moses_tokenize(std::string_view text);

}  // namespace mlmkit
