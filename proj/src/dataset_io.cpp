#include "latent_itr/dataset_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "latent_itr/errors.hpp"

namespace litr {

namespace {

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "' for reading");
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  return out;
}

std::string format_item(const ItemSpec& item, double value) {
  if (item.is_discrete()) return std::to_string(static_cast<long long>(value));
  return format_double(value);
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw std::runtime_error("failed to format a double");
  return std::string(buf, ptr);
}

std::optional<double> parse_double(std::string_view text) {
  if (text.empty()) return std::nullopt;
  if (text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) return std::nullopt;
  return value;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

SchemaFile schema_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("items") || !j["items"].is_array()) {
    throw ValidationError("schema: expected an object with an 'items' array");
  }
  std::vector<ItemSpec> items;
  for (const auto& entry : j["items"]) {
    if (!entry.is_object() || !entry.contains("name") || !entry["name"].is_string() ||
        !entry.contains("kind") || !entry["kind"].is_string()) {
      throw ValidationError("schema: every item needs string 'name' and 'kind'");
    }
    ItemSpec spec;
    spec.name = entry["name"].get<std::string>();
    const auto kind = entry["kind"].get<std::string>();
    if (kind == "discrete") {
      spec.kind = ItemKind::kDiscrete;
      if (!entry.contains("num_categories") || !entry["num_categories"].is_number_integer()) {
        throw ValidationError("schema: discrete item '" + spec.name +
                              "' needs integer 'num_categories'");
      }
      spec.num_categories = entry["num_categories"].get<int>();
    } else if (kind == "continuous") {
      spec.kind = ItemKind::kContinuous;
    } else {
      throw ValidationError("schema: item '" + spec.name + "' has unknown kind '" + kind + "'");
    }
    items.push_back(std::move(spec));
  }
  SchemaFile out{ItemSchema(std::move(items)), {}};
  if (j.contains("covariates")) {
    if (!j["covariates"].is_array()) throw ValidationError("schema: 'covariates' must be an array");
    for (const auto& c : j["covariates"]) {
      if (!c.is_string()) throw ValidationError("schema: covariate names must be strings");
      out.covariates.push_back(c.get<std::string>());
    }
  }
  // Reuse the dataset checks for name collisions.
  Dataset{out.schema, out.covariates, {}}.validate();
  return out;
}

nlohmann::json schema_to_json(const ItemSchema& schema, std::span<const std::string> covariates) {
  nlohmann::json items = nlohmann::json::array();
  for (const auto& item : schema.items()) {
    nlohmann::json entry = {{"name", item.name},
                            {"kind", item.is_discrete() ? "discrete" : "continuous"}};
    if (item.is_discrete()) entry["num_categories"] = item.num_categories;
    items.push_back(std::move(entry));
  }
  return {{"items", std::move(items)},
          {"covariates", std::vector<std::string>(covariates.begin(), covariates.end())}};
}

SchemaFile load_schema(const std::filesystem::path& path) {
  auto in = open_input(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("schema '" + path.string() + "': " + e.what());
  }
  return schema_from_json(j);
}

void save_schema(const ItemSchema& schema, std::span<const std::string> covariates,
                 const std::filesystem::path& path) {
  auto out = open_output(path);
  out << schema_to_json(schema, covariates).dump(2) << '\n';
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

std::vector<std::string> dataset_header(const Dataset& ds) {
  std::vector<std::string> header;
  for (const auto& item : ds.schema.items()) header.push_back("y0_" + item.name);
  for (const auto& item : ds.schema.items()) header.push_back("y1_" + item.name);
  for (const auto& c : ds.covariate_names) header.push_back(c);
  header.emplace_back("treatment");
  header.emplace_back("propensity");
  return header;
}

Dataset parse_dataset(std::istream& in, const SchemaFile& schema) {
  Dataset ds{schema.schema, schema.covariates, {}};
  ds.validate();

  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();

  std::size_t pos = 0;
  while (pos < lines.size() && lines[pos].starts_with('#')) ++pos;
  if (pos == lines.size()) return ds;  // no header: empty dataset

  const std::vector<std::string> expected = dataset_header(ds);
  std::map<std::string, std::size_t, std::less<>> expected_index;
  for (std::size_t c = 0; c < expected.size(); ++c) expected_index.emplace(expected[c], c);

  // column position in file -> canonical column index
  const auto header_fields = split_fields(lines[pos]);
  std::vector<std::size_t> canonical(header_fields.size());
  std::vector<bool> present(expected.size(), false);
  for (std::size_t f = 0; f < header_fields.size(); ++f) {
    auto it = expected_index.find(header_fields[f]);
    if (it == expected_index.end()) {
      throw DataError(0, std::string(header_fields[f]), "unexpected column");
    }
    if (present[it->second]) throw DataError(0, it->first, "duplicate column");
    present[it->second] = true;
    canonical[f] = it->second;
  }
  for (std::size_t c = 0; c < expected.size(); ++c) {
    if (!present[c]) throw DataError(0, expected[c], "missing column");
  }

  const std::size_t J = ds.schema.size();
  const std::size_t P = ds.covariate_names.size();
  std::vector<double> values(expected.size());
  for (std::size_t l = pos + 1; l < lines.size(); ++l) {
    const std::size_t row = l - pos;
    const auto fields = split_fields(lines[l]);
    if (fields.size() != header_fields.size()) {
      const std::string column =
          fields.size() < header_fields.size() ? std::string(header_fields[fields.size()]) : std::string("*");
      throw DataError(row, column, "expected " + std::to_string(header_fields.size()) +
                                    " fields, found " + std::to_string(fields.size()));
    }
    for (std::size_t f = 0; f < fields.size(); ++f) {
      const std::string& column = expected[canonical[f]];
      if (fields[f].empty()) throw DataError(row, column, "missing value");
      auto v = parse_double(fields[f]);
      if (!v) throw DataError(row, column, "non-numeric value '" + std::string(fields[f]) + "'");
      if (!std::isfinite(*v)) throw DataError(row, column, "non-finite value");
      values[canonical[f]] = *v;
    }

    SubjectRecord r;
    r.y0.assign(values.begin(), values.begin() + J);
    r.y1.assign(values.begin() + J, values.begin() + 2 * J);
    r.x.assign(values.begin() + 2 * J, values.begin() + 2 * J + P);
    const double treatment = values[2 * J + P];
    if (treatment != 1.0 && treatment != -1.0) {
      throw DataError(row, "treatment", "treatment must be -1 or 1");
    }
    r.arm = treatment > 0 ? Arm::kPositive : Arm::kNegative;
    r.propensity = values[2 * J + P + 1];
    if (!(r.propensity > 0.0 && r.propensity < 1.0)) {
      throw DataError(row, "propensity", "propensity must lie strictly inside (0, 1)");
    }
    for (std::size_t j = 0; j < J; ++j) {
      try {
        ds.schema.check_value(j, r.y0[j]);
      } catch (const ValidationError& e) {
        throw DataError(row, expected[j], e.what());
      }
      try {
        ds.schema.check_value(j, r.y1[j]);
      } catch (const ValidationError& e) {
        throw DataError(row, expected[J + j], e.what());
      }
    }
    ds.records.push_back(std::move(r));
  }
  return ds;
}

Dataset load_dataset(const std::filesystem::path& data_path, const SchemaFile& schema) {
  auto in = open_input(data_path);
  return parse_dataset(in, schema);
}

Dataset load_dataset(const std::filesystem::path& data_path,
                     const std::filesystem::path& schema_path) {
  return load_dataset(data_path, load_schema(schema_path));
}

void write_dataset(const Dataset& ds, std::ostream& out, std::span<const std::string> preamble) {
  for (const auto& line : preamble) out << "# " << line << '\n';
  const auto header = dataset_header(ds);
  for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
  out << '\n';
  const std::size_t J = ds.schema.size();
  for (const auto& r : ds.records) {
    for (std::size_t j = 0; j < J; ++j) out << format_item(ds.schema[j], r.y0[j]) << ',';
    for (std::size_t j = 0; j < J; ++j) out << format_item(ds.schema[j], r.y1[j]) << ',';
    for (double v : r.x) out << format_double(v) << ',';
    out << to_int(r.arm) << ',' << format_double(r.propensity) << '\n';
  }
}

void save_dataset(const Dataset& ds, const std::filesystem::path& path,
                  std::span<const std::string> preamble) {
  auto out = open_output(path);
  write_dataset(ds, out, preamble);
  out.flush();
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

}  // namespace litr
