#pragma once

#include <string>
#include <string_view>

namespace rarecorpus {

/// Porter (1980) suffix-stripping stemmer, following the reference C
/// implementation's two departures (bli->ble, logi->log).
///
/// Expects a lowercase word. Words of one or two characters are returned
/// unchanged; non-ASCII characters are treated as consonants.
std::string porter_stem(std::string_view word);

}  // namespace rarecorpus
