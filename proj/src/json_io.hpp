// Internal JSON helpers shared by the loaders and writers.
#pragma once

#include "distobs/linalg.hpp"
#include "distobs/model.hpp"

#include <json.hpp>

#include <initializer_list>
#include <string>

namespace distobs::detail {

using Json = nlohmann::json;

/// Array-of-rows. An empty array yields a 0 x `empty_cols` matrix.
Matrix matrix_from_json(const Json& j, const std::string& path, Eigen::Index empty_cols = 0);
Json matrix_to_json(const Matrix& m);

Vector vector_from_json(const Json& j, const std::string& path);
Json vector_to_json(const Vector& v);

SynthesisOptions options_from_json(const Json& j, const std::string& path);
Json options_to_json(const SynthesisOptions& o);

void reject_unknown_keys(const Json& obj, const std::string& path, std::initializer_list<const char*> allowed);

Json parse_document(std::string_view text, const std::string& what);
std::string read_file(const std::string& path);

}  // namespace distobs::detail
