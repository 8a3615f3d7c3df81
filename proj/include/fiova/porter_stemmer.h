#pragma once

#include <string>
#include <string_view>

namespace fiova::lexical {

// The original Porter (1980) suffix-stripping algorithm. Words that are not
// purely lowercase ASCII letters, and words of length <= 2, come back as-is.
std::string porter_stem(std::string_view word);

}  // namespace fiova::lexical
