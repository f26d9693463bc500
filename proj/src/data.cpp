#include "idm/data.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>

#include "idm/error.hpp"
#include "idm/io.hpp"

namespace idm {

Dataset::Dataset(std::vector<Observation> observations,
                 std::vector<std::string> covariate_names)
    : observations_(std::move(observations)),
      covariate_names_(std::move(covariate_names)) {}

std::size_t Dataset::covariate_index(const std::string& name) const {
  for (std::size_t k = 0; k < covariate_names_.size(); ++k)
    if (covariate_names_[k] == name) return k;
  throw Error(ErrorKind::ConfigError, "unknown covariate '" + name + "'");
}

namespace {

int as_flag(double value, std::size_t row, const char* name) {
  if (value == 0.0) return 0;
  if (value == 1.0) return 1;
  throw RowError(ErrorKind::InvalidFlagCombination, row,
                 std::string(name) + " must be 0 or 1");
}

}  // namespace

Dataset validate(const std::vector<RawRecord>& records,
                 std::vector<std::string> covariate_names) {
  if (records.empty())
    throw Error(ErrorKind::DimensionMismatch, "dataset has no observations");
  const std::size_t p = covariate_names.size();
  std::vector<Observation> obs;
  obs.reserve(records.size());
  std::vector<std::string> warnings;

  for (std::size_t row = 0; row < records.size(); ++row) {
    const RawRecord& r = records[row];
    if (r.x.size() != p)
      throw RowError(ErrorKind::DimensionMismatch, row,
                     "expected " + std::to_string(p) + " covariates, got " +
                         std::to_string(r.x.size()));
    bool finite = std::isfinite(r.v) && std::isfinite(r.w);
    for (double xk : r.x) finite = finite && std::isfinite(xk);
    if (!finite)
      throw RowError(ErrorKind::MissingValue, row, "non-finite entry");

    Observation o;
    o.v = r.v;
    o.w = r.w;
    o.delta1 = as_flag(r.delta1, row, "delta1");
    o.delta2 = as_flag(r.delta2, row, "delta2");
    o.delta3 = as_flag(r.delta3, row, "delta3");
    o.x = r.x;

    if (o.delta1 + o.delta2 > 1)
      throw RowError(ErrorKind::InvalidFlagCombination, row,
                     "delta1 and delta2 are mutually exclusive");
    if (o.delta3 == 1 && o.delta1 == 0)
      throw RowError(ErrorKind::InvalidFlagCombination, row,
                     "delta3 requires delta1");
    if (!(o.v > 0.0))
      throw RowError(ErrorKind::NegativeTime, row, "v must be positive");
    if (o.delta1 == 0) {
      if (o.w != 0.0)
        throw RowError(ErrorKind::NegativeTime, row,
                       "w must be 0 when delta1 = 0");
    } else {
      if (o.w < o.v)
        throw RowError(ErrorKind::NegativeTime, row, "w must be >= v");
      if (o.w == o.v && o.delta3 == 1)
        warnings.push_back("row " + std::to_string(row) +
                           ": death recorded at the diagnosis instant");
    }
    obs.push_back(std::move(o));
  }

  Dataset data(std::move(obs), std::move(covariate_names));
  for (auto& w : warnings) data.add_warning(std::move(w));
  return data;
}

TransitionCounts transition_counts(const Dataset& data) noexcept {
  TransitionCounts c;
  c.n0 = data.size();
  for (const auto& o : data.observations()) {
    c.n01 += o.delta1;
    c.n02 += o.delta2;
    c.n12 += o.delta3;
  }
  c.n1 = c.n01;
  return c;
}

namespace {

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n\"";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

double parse_number(std::string_view field, std::size_t row) {
  if (field.empty() || field == "NA" || field == "NaN" || field == "nan")
    throw RowError(ErrorKind::MissingValue, row, "missing value");
  double value = 0.0;
  const char* first = field.data();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size())
    throw RowError(ErrorKind::ParseError, row,
                   "cannot parse '" + std::string(field) + "'");
  return value;
}

}  // namespace

Dataset read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line))
    throw Error(ErrorKind::ParseError, "empty CSV input");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);

  const auto header = split(line);
  constexpr std::array<std::string_view, 5> required{"v", "w", "delta1", "delta2", "delta3"};
  std::array<std::optional<std::size_t>, 5> pos;
  std::vector<std::size_t> covariate_cols;
  std::vector<std::string> names;
  for (std::size_t c = 0; c < header.size(); ++c) {
    bool matched = false;
    for (std::size_t k = 0; k < required.size(); ++k) {
      if (header[c] == required[k]) {
        if (pos[k]) throw Error(ErrorKind::ParseError, "duplicate column '" + std::string(header[c]) + "'");
        pos[k] = c;
        matched = true;
      }
    }
    if (!matched) {
      if (header[c].empty()) throw Error(ErrorKind::ParseError, "empty column name");
      covariate_cols.push_back(c);
      names.emplace_back(header[c]);
    }
  }
  for (std::size_t k = 0; k < required.size(); ++k)
    if (!pos[k])
      throw Error(ErrorKind::ParseError, "missing column '" + std::string(required[k]) + "'");

  std::vector<RawRecord> records;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto fields = split(line);
    if (fields.size() != header.size())
      throw RowError(ErrorKind::DimensionMismatch, row,
                     "expected " + std::to_string(header.size()) + " fields, got " +
                         std::to_string(fields.size()));
    RawRecord r;
    r.v = parse_number(fields[*pos[0]], row);
    r.w = parse_number(fields[*pos[1]], row);
    r.delta1 = parse_number(fields[*pos[2]], row);
    r.delta2 = parse_number(fields[*pos[3]], row);
    r.delta3 = parse_number(fields[*pos[4]], row);
    r.x.reserve(covariate_cols.size());
    for (auto c : covariate_cols) r.x.push_back(parse_number(fields[c], row));
    records.push_back(std::move(r));
    ++row;
  }
  return validate(records, std::move(names));
}

Dataset read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open '" + path + "'");
  return read_csv(in);
}

void write_csv(std::ostream& out, const Dataset& data) {
  out << "v,w,delta1,delta2,delta3";
  for (const auto& name : data.covariate_names()) out << ',' << name;
  out << '\n';
  for (const auto& o : data.observations()) {
    write_number(out, o.v);
    out << ',';
    write_number(out, o.w);
    out << ',' << o.delta1 << ',' << o.delta2 << ',' << o.delta3;
    for (double xk : o.x) {
      out << ',';
      write_number(out, xk);
    }
    out << '\n';
  }
}

void write_csv_file(const std::string& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::IoError, "cannot write '" + path + "'");
  write_csv(out, data);
}

}  // namespace idm
