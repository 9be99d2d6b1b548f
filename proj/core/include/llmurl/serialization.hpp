#pragma once

#include <json.hpp>

#include "llmurl/eval.hpp"

namespace llmurl {

/// On-disk form of a RetrievalResult. Document HTML and passage token lists
/// are not persisted; tokens are recomputed on load.
nlohmann::ordered_json to_json(const RetrievalResult& r);
RetrievalResult retrieval_result_from_json(const nlohmann::json& j);

nlohmann::ordered_json to_json(const ExtractedUrl& u);
nlohmann::ordered_json to_json(const Document& d);
nlohmann::ordered_json to_json(const RankedPassage& p);
nlohmann::ordered_json to_json(const AnswerRecord& a);

/// Serialized record text (2-space indented, trailing newline).
std::string result_text(const RetrievalResult& r);
RetrievalResult parse_result_text(std::string_view text, std::string_view source_name);

}  // namespace llmurl
