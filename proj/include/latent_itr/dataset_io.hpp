#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "latent_itr/dataset.hpp"

namespace litr {

// Contents of a schema file:
//   {"items": [{"name": ..., "kind": "discrete"|"continuous", "num_categories": ...}],
//    "covariates": [name, ...]}
struct SchemaFile {
  ItemSchema schema;
  std::vector<std::string> covariates;
};

SchemaFile schema_from_json(const nlohmann::json& j);
nlohmann::json schema_to_json(const ItemSchema& schema, std::span<const std::string> covariates);
SchemaFile load_schema(const std::filesystem::path& path);
void save_schema(const ItemSchema& schema, std::span<const std::string> covariates,
                 const std::filesystem::path& path);

// Comma-delimited data with header row. Columns are addressed by name:
// y0_<item>, y1_<item>, <covariate>, treatment, propensity. Leading lines
// beginning with '#' are metadata and skipped.
Dataset parse_dataset(std::istream& in, const SchemaFile& schema);
Dataset load_dataset(const std::filesystem::path& data_path, const SchemaFile& schema);
Dataset load_dataset(const std::filesystem::path& data_path,
                     const std::filesystem::path& schema_path);

// Writes the format accepted by load_dataset. Each preamble entry becomes a
// '# ' metadata line ahead of the header.
void write_dataset(const Dataset& ds, std::ostream& out,
                   std::span<const std::string> preamble = {});
void save_dataset(const Dataset& ds, const std::filesystem::path& path,
                  std::span<const std::string> preamble = {});

std::vector<std::string> dataset_header(const Dataset& ds);

// Shortest text that parses back to the identical double.
std::string format_double(double value);
std::optional<double> parse_double(std::string_view text);

// Splits one delimited line; no quoting is supported (names cannot contain commas).
std::vector<std::string_view> split_fields(std::string_view line);

}  // namespace litr
