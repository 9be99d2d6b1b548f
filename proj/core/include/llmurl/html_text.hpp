#pragma once

#include <string>
#include <string_view>

#include "llmurl/error.hpp"

namespace llmurl {

class EmptyDocument : public Error {
  public:
    using Error::Error;
};

/// Visible body text of an HTML page, one block element per line.
///
/// Tolerant of unclosed and misnested tags. Removed before extraction:
/// script/style/noscript/template/head/nav/footer content, Wikipedia infoboxes
/// and navboxes, edit-section links, citation superscripts, reference lists,
/// and everything from the "References" heading onward. When the page has a
/// `mw-content-text` container only its contents are considered. Entities are
/// decoded and whitespace is collapsed within each line.
///
/// Throws EmptyDocument when no visible text remains.
std::string extract_text(std::string_view html);

}  // namespace llmurl
