#include "commsynth/config.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

namespace commsynth {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <class Int>
std::optional<Int> to_int(std::string_view s) {
  Int v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<bool> to_bool(std::string_view s) {
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  return std::nullopt;
}

struct Entry {
  std::string value;
  int line;
};

}  // namespace

ParseError::ParseError(int line, const std::string& reason)
    : Error("cli.ParseError", "line " + std::to_string(line) + ": " + reason), line_(line) {}

ValidationError::ValidationError(std::string field, const std::string& reason)
    : Error("cli.ValidationError", field + ": " + reason), field_(std::move(field)) {}

PermutationScope parse_scope(std::string_view text) {
  if (text == "c-innermost" || text == "c_innermost") return PermutationScope::kCInnermost;
  if (text == "all") return PermutationScope::kAll;
  throw ValidationError("scope", "expected c-innermost or all, got '" + std::string(text) + "'");
}

RunConfig parse_config(std::string_view text) {
  static const char* const kKeys[] = {"Nb", "Nk", "Nc", "Nh", "Nw", "Nr", "Ns", "sigma_w",
                                      "sigma_h", "P", "M", "MD", "scope", "strict",
                                      "lower_bound", "element_width", "seed",
                                      "oracle_max_points"};
  std::map<std::string, Entry, std::less<>> entries;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto eol = text.find('\n', pos);
    std::string_view line =
        text.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
    pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError(line_no, "expected key = value");
    const std::string_view key = trim(line.substr(0, eq));
    const std::string_view value = trim(line.substr(eq + 1));
    if (key.empty()) throw ParseError(line_no, "missing key");
    if (value.empty()) throw ParseError(line_no, "missing value for '" + std::string(key) + "'");
    if (std::find(std::begin(kKeys), std::end(kKeys), key) == std::end(kKeys)) {
      throw ParseError(line_no, "unknown key '" + std::string(key) + "'");
    }
    if (entries.count(key) != 0) {
      throw ParseError(line_no, "duplicate key '" + std::string(key) + "'");
    }
    entries.emplace(std::string(key), Entry{std::string(value), line_no});
  }

  auto count_field = [&](const char* key, std::optional<Count> fallback) -> Count {
    const auto it = entries.find(key);
    if (it == entries.end()) {
      if (!fallback) throw ValidationError(key, "required");
      return *fallback;
    }
    const auto v = to_int<Count>(it->second.value);
    if (!v) {
      throw ValidationError(key, "line " + std::to_string(it->second.line) +
                                     ": not an integer: '" + it->second.value + "'");
    }
    if (*v < 1) throw ValidationError(key, "must be >= 1");
    return *v;
  };

  RunConfig cfg;
  ConvProblem& p = cfg.problem;
  p.n_b = count_field("Nb", std::nullopt);
  p.n_k = count_field("Nk", std::nullopt);
  p.n_c = count_field("Nc", std::nullopt);
  p.n_h = count_field("Nh", std::nullopt);
  p.n_w = count_field("Nw", std::nullopt);
  p.n_r = count_field("Nr", std::nullopt);
  p.n_s = count_field("Ns", std::nullopt);
  p.sigma_w = count_field("sigma_w", 1);
  p.sigma_h = count_field("sigma_h", 1);
  cfg.machine.p = count_field("P", std::nullopt);
  cfg.machine.m = count_field("M", std::nullopt);
  cfg.machine.m_d = count_field("MD", std::nullopt);
  cfg.element_width = count_field("element_width", 4);
  cfg.oracle_max_points = count_field("oracle_max_points", 10'000'000);

  if (const auto it = entries.find("seed"); it != entries.end()) {
    const auto v = to_int<std::uint64_t>(it->second.value);
    if (!v) throw ValidationError("seed", "not an unsigned integer: '" + it->second.value + "'");
    cfg.seed = *v;
  }
  if (const auto it = entries.find("scope"); it != entries.end()) {
    cfg.scope = parse_scope(it->second.value);
  }
  for (const char* key : {"strict", "lower_bound"}) {
    const auto it = entries.find(key);
    if (it == entries.end()) continue;
    const auto v = to_bool(it->second.value);
    if (!v) throw ValidationError(key, "expected true or false, got '" + it->second.value + "'");
    (std::string_view(key) == "strict" ? cfg.strict : cfg.lower_bound) = *v;
  }

  if (cfg.machine.m_d < cfg.machine.m) throw ValidationError("MD", "must be >= M");
  const Count smallest = tile_memory(TilePlan{}, p);
  if (cfg.machine.m < smallest) {
    throw ValidationError("M", "cannot hold the smallest tile (" + std::to_string(smallest) +
                                   " elements)");
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cli.IoError", "cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string render_config(const RunConfig& cfg) {
  const ConvProblem& p = cfg.problem;
  std::ostringstream os;
  os << "# problem\n"
     << "Nb = " << p.n_b << "\nNk = " << p.n_k << "\nNc = " << p.n_c << "\nNh = " << p.n_h
     << "\nNw = " << p.n_w << "\nNr = " << p.n_r << "\nNs = " << p.n_s
     << "\nsigma_w = " << p.sigma_w << "\nsigma_h = " << p.sigma_h << '\n'
     << "# machine\n"
     << "P = " << cfg.machine.p << "\nM = " << cfg.machine.m << "\nMD = " << cfg.machine.m_d
     << '\n'
     << "# modes\n"
     << "scope = " << to_string(cfg.scope) << "\nstrict = " << (cfg.strict ? "true" : "false")
     << "\nlower_bound = " << (cfg.lower_bound ? "true" : "false")
     << "\nelement_width = " << cfg.element_width << "\nseed = " << cfg.seed
     << "\noracle_max_points = " << cfg.oracle_max_points << '\n';
  return os.str();
}

}  // namespace commsynth
