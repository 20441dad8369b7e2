#pragma once

#include <string>
#include <string_view>

namespace hscan::html {

/// Visible text of the main document body: markup, scripts, styles and
/// comments dropped, entities decoded, whitespace collapsed. Block-level
/// tags become line breaks. Uses `<article>` content when the page has one.
std::string extract_text(std::string_view html);

bool looks_like_html(std::string_view content_type, std::string_view body);

}  // namespace hscan::html
