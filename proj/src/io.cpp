#include "drsf/io.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace drsf {

namespace {

using nlohmann::json;

std::string format_double(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof buffer, "%.17g", value);
  return buffer;
}

std::string format_fixed6(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof buffer, "%.6f", value);
  return buffer;
}

std::string format_short(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof buffer, "%.6g", value);
  return buffer;
}

std::string trim(const std::string& text) {
  std::size_t lo = 0, hi = text.size();
  while (lo < hi && std::isspace(static_cast<unsigned char>(text[lo]))) ++lo;
  while (hi > lo && std::isspace(static_cast<unsigned char>(text[hi - 1]))) --hi;
  return text.substr(lo, hi - lo);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      cells.push_back(trim(line.substr(start)));
      return cells;
    }
    cells.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
}

bool parse_number(const std::string& cell, double& out) {
  if (cell.empty()) return false;
  char* end = nullptr;
  errno = 0;
  const double value = std::strtod(cell.c_str(), &end);
  if (end != cell.c_str() + cell.size()) return false;
  if (!std::isfinite(value)) return false;
  out = value;
  return true;
}

[[noreturn]] void cell_error(const std::string& what, int row, const std::string& column) {
  throw std::invalid_argument(what + " at row " + std::to_string(row) + ", column \"" +
                              column + "\"");
}

struct RawTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

RawTable parse_table(const std::string& text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t newline = text.find('\n', start);
    std::string line = newline == std::string::npos ? text.substr(start)
                                                    : text.substr(start, newline - start);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
    if (newline == std::string::npos) break;
    start = newline + 1;
  }
  while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
  if (lines.empty()) throw std::invalid_argument("missing header");

  RawTable table;
  table.header = split_csv_line(lines.front());
  for (std::size_t i = 1; i < lines.size(); ++i) {
    auto cells = split_csv_line(lines[i]);
    if (cells.size() != table.header.size())
      throw std::invalid_argument("wrong field count at row " + std::to_string(i));
    table.rows.push_back(std::move(cells));
  }
  return table;
}

constexpr const char* kMandatory[4] = {"id", "time", "event", "treatment"};

SurvivalDataset build_dataset(const RawTable& table,
                              const std::vector<CovariateInfo>* declared) {
  for (std::size_t c = 0; c < 4; ++c)
    if (c >= table.header.size() || table.header[c] != kMandatory[c])
      throw std::invalid_argument(std::string("missing column \"") + kMandatory[c] +
                                  "\"");
  if (table.rows.empty()) throw std::invalid_argument("no data rows");

  const auto n = static_cast<Eigen::Index>(table.rows.size());
  const auto p = static_cast<Eigen::Index>(table.header.size() - 4);

  Eigen::VectorXd times(n);
  std::vector<std::uint8_t> events(table.rows.size()), treatments(table.rows.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& cells = table.rows[static_cast<std::size_t>(i)];
    const int row = static_cast<int>(i) + 1;
    for (std::size_t c = 0; c < cells.size(); ++c)
      if (cells[c].empty()) cell_error("missing value", row, table.header[c]);

    double value = 0.0;
    if (!parse_number(cells[1], value)) cell_error("unparsable number", row, "time");
    if (value < 0.0) cell_error("negative time", row, "time");
    times[i] = value;

    if (!parse_number(cells[2], value) || (value != 0.0 && value != 1.0))
      cell_error("event must be 0 or 1", row, "event");
    events[static_cast<std::size_t>(i)] = value == 1.0 ? 1 : 0;

    if (!parse_number(cells[3], value) || (value != 0.0 && value != 1.0))
      cell_error("treatment must be 0 or 1", row, "treatment");
    treatments[static_cast<std::size_t>(i)] = value == 1.0 ? 1 : 0;
  }

  std::vector<CovariateInfo> schema;
  if (declared) {
    if (static_cast<Eigen::Index>(declared->size()) != p)
      throw std::invalid_argument("schema does not match header");
    for (Eigen::Index j = 0; j < p; ++j)
      if ((*declared)[static_cast<std::size_t>(j)].name !=
          table.header[static_cast<std::size_t>(4 + j)])
        throw std::invalid_argument("schema does not match header");
    schema = *declared;
  } else {
    for (Eigen::Index j = 0; j < p; ++j) {
      const auto& name = table.header[static_cast<std::size_t>(4 + j)];
      bool numeric = true;
      double ignored = 0.0;
      std::set<std::string> distinct;
      for (const auto& cells : table.rows) {
        const auto& cell = cells[static_cast<std::size_t>(4 + j)];
        if (!parse_number(cell, ignored)) numeric = false;
        distinct.insert(cell);
      }
      if (numeric) {
        schema.push_back(CovariateInfo::numeric(name));
      } else if (distinct.size() <= 10) {
        schema.push_back(CovariateInfo::categorical(
            name, {distinct.begin(), distinct.end()}));
      } else {
        throw std::invalid_argument("more than 10 distinct values in column \"" + name +
                                    "\"");
      }
    }
  }

  Eigen::MatrixXd covariates(n, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& cells = table.rows[static_cast<std::size_t>(i)];
    const int row = static_cast<int>(i) + 1;
    for (Eigen::Index j = 0; j < p; ++j) {
      const auto& info = schema[static_cast<std::size_t>(j)];
      const auto& cell = cells[static_cast<std::size_t>(4 + j)];
      if (info.kind == CovariateKind::Numeric) {
        double value = 0.0;
        if (!parse_number(cell, value)) cell_error("unparsable number", row, info.name);
        covariates(i, j) = value;
      } else {
        const auto at = std::find(info.level_names.begin(), info.level_names.end(), cell);
        if (at == info.level_names.end())
          cell_error("unknown level \"" + cell + "\"", row, info.name);
        covariates(i, j) = static_cast<double>(at - info.level_names.begin());
      }
    }
  }

  return SurvivalDataset(std::move(times), std::move(events), std::move(treatments),
                         std::move(covariates), std::move(schema));
}

void append_le64(std::string& out, std::uint64_t value) {
  for (int b = 0; b < 8; ++b)
    out.push_back(static_cast<char>((value >> (8 * b)) & 0xff));
}

std::uint64_t take_le64(const std::string& bytes, std::size_t at) {
  std::uint64_t value = 0;
  for (int b = 7; b >= 0; --b)
    value = (value << 8) | static_cast<unsigned char>(bytes[at + static_cast<std::size_t>(b)]);
  return value;
}

constexpr char kProximityMagic[8] = {'D', 'R', 'S', 'F', 'P', 'R', 'X', '1'};

double maybe_null(const json& value) {
  return value.is_null() ? std::numeric_limits<double>::quiet_NaN()
                         : value.get<double>();
}

json node_to_json(const TreeNode& node, const std::vector<CovariateInfo>& schema) {
  json j;
  j["terminal"] = node.is_terminal;
  if (node.is_terminal) {
    j["id"] = node.terminal_id;
    return j;
  }
  j["variable"] = node.split.variable;
  if (node.split.variable >= 0 &&
      node.split.variable < static_cast<int>(schema.size()))
    j["name"] = schema[static_cast<std::size_t>(node.split.variable)].name;
  j["categorical"] = node.split.categorical;
  if (node.split.categorical)
    j["left_levels"] = node.split.left_levels;
  else
    j["threshold"] = node.split.threshold;
  j["left"] = node.left;
  j["right"] = node.right;
  return j;
}

TreeNode node_from_json(const json& j) {
  TreeNode node;
  node.is_terminal = j.at("terminal").get<bool>();
  if (node.is_terminal) {
    node.terminal_id = j.at("id").get<int>();
    return node;
  }
  node.split.variable = j.at("variable").get<int>();
  node.split.categorical = j.at("categorical").get<bool>();
  if (node.split.categorical)
    node.split.left_levels = j.at("left_levels").get<std::vector<int>>();
  else
    node.split.threshold = j.at("threshold").get<double>();
  node.left = j.at("left").get<int>();
  node.right = j.at("right").get<int>();
  return node;
}

// split condition as text, e.g. `x6 <= 0.25` or `grp in {a, b}`
std::string describe_split(const Split& split, const std::vector<CovariateInfo>& schema,
                           bool left) {
  std::string name = "covariate " + std::to_string(split.variable);
  const CovariateInfo* info = nullptr;
  if (split.variable >= 0 && split.variable < static_cast<int>(schema.size())) {
    info = &schema[static_cast<std::size_t>(split.variable)];
    name = info->name;
  }
  if (!split.categorical)
    return name + (left ? " <= " : " > ") + format_short(split.threshold);
  std::string levels;
  for (const int level : split.left_levels) {
    if (!levels.empty()) levels += ", ";
    if (info && level >= 0 && level < static_cast<int>(info->level_names.size()))
      levels += info->level_names[static_cast<std::size_t>(level)];
    else
      levels += std::to_string(level);
  }
  return name + (left ? " in {" : " not in {") + levels + "}";
}

void render_node(const ProfileResult& profile, const std::vector<CovariateInfo>& schema,
                 int idx, const std::string& indent, std::string& out) {
  const TreeNode& node = profile.tree.nodes[static_cast<std::size_t>(idx)];
  if (node.is_terminal) {
    const LeafEffect* effect = nullptr;
    for (const auto& candidate : profile.leaf_effects)
      if (candidate.leaf == node.terminal_id) effect = &candidate;
    out += indent + "leaf " + std::to_string(node.terminal_id);
    if (effect && effect->defined)
      out += ": treatment " + std::to_string(effect->events_treatment) + "/" +
             std::to_string(effect->n_treatment) + " events, control " +
             std::to_string(effect->events_control) + "/" +
             std::to_string(effect->n_control) + " events, HR = " +
             format_short(effect->hazard_ratio) + ", log-rank p = " +
             format_short(effect->logrank_p) + "\n";
    else if (effect)
      out += ": effect undefined (treatment n=" + std::to_string(effect->n_treatment) +
             ", control n=" + std::to_string(effect->n_control) + ")\n";
    else
      out += "\n";
    return;
  }
  out += indent + describe_split(node.split, schema, true) + ":\n";
  render_node(profile, schema, node.left, indent + "  ", out);
  out += indent + describe_split(node.split, schema, false) + ":\n";
  render_node(profile, schema, node.right, indent + "  ", out);
}

}  // namespace

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * length);
  for (unsigned int i = 0; i < length; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

std::string sha256_file(const std::string& path) { return sha256_hex(read_file(path)); }

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (!in.good() && !in.eof()) throw std::runtime_error("cannot read file: " + path);
  return buffer.str();
}

void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out.good()) throw std::runtime_error("cannot write file: " + path);
}

SurvivalDataset dataset_from_csv(const std::string& text) {
  return build_dataset(parse_table(text), nullptr);
}

SurvivalDataset dataset_from_csv(const std::string& text,
                                 const std::vector<CovariateInfo>& schema) {
  return build_dataset(parse_table(text), &schema);
}

SurvivalDataset ingest_csv(const std::string& path) {
  return dataset_from_csv(read_file(path));
}

SurvivalDataset ingest_csv(const std::string& path,
                           const std::vector<CovariateInfo>& schema) {
  return dataset_from_csv(read_file(path), schema);
}

std::string dataset_to_csv(const SurvivalDataset& data) {
  std::string out = "id,time,event,treatment";
  for (const auto& info : data.schema()) out += "," + info.name;
  out += "\n";
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    out += std::to_string(i + 1);
    out += "," + format_double(data.time(i));
    out += data.event(i) ? ",1" : ",0";
    out += data.treatment(i) == 1 ? ",1" : ",0";
    for (Eigen::Index j = 0; j < data.p(); ++j) {
      const auto& info = data.schema()[static_cast<std::size_t>(j)];
      if (info.kind == CovariateKind::Categorical) {
        const auto level = static_cast<std::size_t>(data.covariate(i, j));
        out += "," + info.level_names[level];
      } else {
        out += "," + format_double(data.covariate(i, j));
      }
    }
    out += "\n";
  }
  return out;
}

void export_csv(const SurvivalDataset& data, const std::string& path) {
  write_file(path, dataset_to_csv(data));
}

std::string truth_to_csv(const GeneratedDataset& generated) {
  std::string out = "id,region,true_time,censor_time\n";
  for (Eigen::Index i = 0; i < generated.data.n(); ++i) {
    out += std::to_string(i + 1);
    out += "," + std::to_string(generated.region[i]);
    out += "," + format_double(generated.true_times[i]);
    out += "," + format_double(generated.censor_times[i]);
    out += "\n";
  }
  return out;
}

void write_proximity(const FusedProximity& fused, const std::string& path) {
  std::string out(kProximityMagic, sizeof kProximityMagic);
  append_le64(out, static_cast<std::uint64_t>(fused.values.rows()));
  append_le64(out, static_cast<std::uint64_t>(fused.values.cols()));
  append_le64(out, static_cast<std::uint64_t>(fused.total_trees));
  append_le64(out, static_cast<std::uint64_t>(fused.config_count));
  for (Eigen::Index i = 0; i < fused.values.rows(); ++i)
    for (Eigen::Index j = 0; j < fused.values.cols(); ++j) {
      std::uint64_t bits = 0;
      const double value = fused.values(i, j);
      std::memcpy(&bits, &value, sizeof bits);
      append_le64(out, bits);
    }
  write_file(path, out);
}

FusedProximity read_proximity(const std::string& path) {
  const std::string bytes = read_file(path);
  if (bytes.size() < 40) throw std::invalid_argument("truncated proximity file");
  if (std::memcmp(bytes.data(), kProximityMagic, sizeof kProximityMagic) != 0)
    throw std::invalid_argument("bad proximity magic");
  const auto rows = static_cast<Eigen::Index>(take_le64(bytes, 8));
  const auto cols = static_cast<Eigen::Index>(take_le64(bytes, 16));
  if (rows < 0 || cols < 0 || rows > (1 << 20) || cols > (1 << 20))
    throw std::invalid_argument("bad proximity dimensions");
  const std::size_t expected =
      40 + static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols) * 8;
  if (bytes.size() < expected) throw std::invalid_argument("truncated proximity file");
  if (bytes.size() > expected)
    throw std::invalid_argument("trailing bytes in proximity file");

  FusedProximity fused;
  fused.total_trees = static_cast<long long>(take_le64(bytes, 24));
  fused.config_count = static_cast<int>(take_le64(bytes, 32));
  fused.values.resize(rows, cols);
  std::size_t at = 40;
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) {
      const std::uint64_t bits = take_le64(bytes, at);
      at += 8;
      double value = 0.0;
      std::memcpy(&value, &bits, sizeof value);
      fused.values(i, j) = value;
    }
  return fused;
}

std::string profile_to_json(const ProfileResult& profile,
                            const std::vector<CovariateInfo>& schema, double p_star) {
  json doc;
  doc["format"] = "drsf-profile/1";
  doc["heterogeneous"] = profile.heterogeneous;
  doc["k"] = profile.k;
  doc["num_leaves"] = profile.num_leaves;
  doc["p_leaf"] = profile.p_leaf;
  doc["p_star"] = p_star;
  doc["metric"] = profile.metric;

  json tree;
  tree["n_leaves"] = profile.tree.n_leaves;
  tree["min_leaf_size"] = profile.tree.min_leaf_size;
  tree["nodes"] = json::array();
  for (const auto& node : profile.tree.nodes)
    tree["nodes"].push_back(node_to_json(node, schema));
  doc["tree"] = tree;

  doc["leaf_effects"] = json::array();
  for (const auto& effect : profile.leaf_effects) {
    json entry;
    entry["leaf"] = effect.leaf;
    entry["n_treatment"] = effect.n_treatment;
    entry["n_control"] = effect.n_control;
    entry["events_treatment"] = effect.events_treatment;
    entry["events_control"] = effect.events_control;
    entry["hazard_ratio"] = effect.hazard_ratio;  // NaN serializes as null
    entry["logrank_p"] = effect.logrank_p;
    entry["defined"] = effect.defined;
    doc["leaf_effects"].push_back(entry);
  }
  return doc.dump(2) + "\n";
}

ProfileResult profile_from_json(const std::string& text) {
  const json doc = json::parse(text);
  if (doc.at("format").get<std::string>() != "drsf-profile/1")
    throw std::invalid_argument("unknown profile format");

  ProfileResult profile;
  profile.heterogeneous = doc.at("heterogeneous").get<bool>();
  profile.k = doc.at("k").get<int>();
  profile.num_leaves = doc.at("num_leaves").get<int>();
  profile.p_leaf = doc.at("p_leaf").get<double>();
  profile.metric = doc.at("metric").get<double>();

  const json& tree = doc.at("tree");
  profile.tree.n_leaves = tree.at("n_leaves").get<int>();
  profile.tree.min_leaf_size = tree.at("min_leaf_size").get<int>();
  for (const auto& node : tree.at("nodes")) profile.tree.nodes.push_back(node_from_json(node));

  for (const auto& entry : doc.at("leaf_effects")) {
    LeafEffect effect;
    effect.leaf = entry.at("leaf").get<int>();
    effect.n_treatment = entry.at("n_treatment").get<int>();
    effect.n_control = entry.at("n_control").get<int>();
    effect.events_treatment = entry.at("events_treatment").get<int>();
    effect.events_control = entry.at("events_control").get<int>();
    effect.hazard_ratio = maybe_null(entry.at("hazard_ratio"));
    effect.logrank_p = maybe_null(entry.at("logrank_p"));
    effect.defined = entry.at("defined").get<bool>();
    profile.leaf_effects.push_back(effect);
  }
  return profile;
}

std::string render_profile_text(const ProfileResult& profile,
                                const std::vector<CovariateInfo>& schema,
                                double p_star) {
  std::string out = "verdict: ";
  out += profile.heterogeneous ? "heterogeneous" : "homogeneous";
  out += "\n";
  if (profile.heterogeneous)
    out += "p_leaf = " + format_short(profile.p_leaf) + " < p* = " +
           format_short(p_star) + ", clusters k = " + std::to_string(profile.k) +
           ", leaves = " + std::to_string(profile.num_leaves) + "\n";
  else
    out += "no candidate p_leaf below p* = " + format_short(p_star) + "\n";
  out += "\n";
  if (!profile.tree.nodes.empty()) render_node(profile, schema, 0, "", out);
  return out;
}

std::string ecdf_csv(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("empty value list");
  std::sort(values.begin(), values.end());
  std::string out = "value,probability\n";
  for (std::size_t i = 0; i < values.size(); ++i) {
    out += format_double(values[i]);
    out += ",";
    out += format_double(static_cast<double>(i + 1) / static_cast<double>(values.size()));
    out += "\n";
  }
  return out;
}

std::string gradient_csv(const GradientGrid& grid) {
  std::string out;
  out.reserve(static_cast<std::size_t>(grid.values.size()) * 10);
  for (Eigen::Index i = 0; i < grid.values.rows(); ++i) {
    for (Eigen::Index j = 0; j < grid.values.cols(); ++j) {
      if (j > 0) out += ",";
      out += format_fixed6(grid.values(i, j));
    }
    out += "\n";
  }
  return out;
}

std::string gradient_pgm(const GradientGrid& grid) {
  const auto size = static_cast<int>(grid.values.rows());
  std::string out = "P2\n" + std::to_string(size) + " " + std::to_string(size) + "\n255\n";
  for (int r = 0; r < size; ++r) {
    // top row shows the second covariate's upper end
    for (int c = 0; c < size; ++c) {
      const double value = grid.values(c, size - 1 - r);
      const long level =
          std::clamp(std::lround((value + 1.0) * 127.5), 0L, 255L);
      if (c > 0) out += " ";
      out += std::to_string(level);
    }
    out += "\n";
  }
  return out;
}

ConfigDoc parse_config_text(const std::string& text) {
  ConfigDoc doc;
  std::string section;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3)
        throw std::invalid_argument("bad config line " + std::to_string(line_no));
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty())
        throw std::invalid_argument("bad config line " + std::to_string(line_no));
      doc[section];
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("bad config line " + std::to_string(line_no));
    const std::string key = trim(line.substr(0, eq));
    if (key.empty())
      throw std::invalid_argument("bad config line " + std::to_string(line_no));
    doc[section][key] = trim(line.substr(eq + 1));
  }
  return doc;
}

}  // namespace drsf
