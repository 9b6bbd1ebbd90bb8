#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "iterclust/error.hpp"
#include "iterclust/random.hpp"

namespace iterclust {

using ObsId = std::uint32_t;
using ValueId = std::uint32_t;

struct VariableSchema {
  std::size_t index = 0;
  std::string name;
  std::vector<std::string> values;  // ordinal -> symbol, first-seen order

  std::size_t arity() const { return values.size(); }
};

struct Observation {
  ObsId id = 0;
  std::vector<ValueId> values;  // one ordinal per variable
};

// Flat addressing of a per-variable value-count table: the counts of
// variable i occupy [offset(i), offset(i) + arity(i)).
class CountLayout {
 public:
  CountLayout() = default;

  explicit CountLayout(const std::vector<VariableSchema>& schema) {
    offsets_.reserve(schema.size() + 1);
    offsets_.push_back(0);
    for (const auto& v : schema) offsets_.push_back(offsets_.back() + v.arity());
  }

  explicit CountLayout(const std::vector<std::size_t>& arities) {
    offsets_.push_back(0);
    for (auto a : arities) offsets_.push_back(offsets_.back() + a);
  }

  std::size_t variables() const { return offsets_.empty() ? 0 : offsets_.size() - 1; }
  std::size_t offset(std::size_t var) const { return offsets_[var]; }
  std::size_t arity(std::size_t var) const { return offsets_[var + 1] - offsets_[var]; }
  std::size_t total() const { return offsets_.empty() ? 0 : offsets_.back(); }

  bool operator==(const CountLayout&) const = default;

 private:
  std::vector<std::size_t> offsets_;
};

struct Dataset {
  std::string name;
  std::vector<VariableSchema> schema;
  std::vector<Observation> observations;

  std::size_t size() const { return observations.size(); }
  std::size_t variables() const { return schema.size(); }
  CountLayout layout() const { return CountLayout(schema); }

  const Observation& at(ObsId id) const { return observations.at(id); }

  const std::string& symbol(std::size_t var, ValueId value) const {
    return schema.at(var).values.at(value);
  }

  std::vector<std::string> decode(const Observation& obs) const {
    std::vector<std::string> out;
    out.reserve(obs.values.size());
    for (std::size_t i = 0; i < obs.values.size(); ++i) out.push_back(symbol(i, obs.values[i]));
    return out;
  }

  // Encodes rows of symbols. Ordinals are assigned in first-seen order.
  static Dataset from_rows(std::vector<std::string> names,
                           const std::vector<std::vector<std::string>>& rows,
                           std::string dataset_name = "") {
    if (rows.empty()) throw EmptyInputError("dataset has no observations");
    const std::size_t width = rows.front().size();
    if (width == 0) throw FormatError("dataset has no variables");
    if (names.empty()) {
      for (std::size_t i = 0; i < width; ++i) names.push_back("v" + std::to_string(i));
    }
    if (names.size() != width) {
      throw FormatError("header has " + std::to_string(names.size()) + " columns, rows have " +
                        std::to_string(width));
    }

    Dataset d;
    d.name = std::move(dataset_name);
    d.schema.resize(width);
    std::vector<std::unordered_map<std::string, ValueId>> lookup(width);
    for (std::size_t i = 0; i < width; ++i) {
      d.schema[i].index = i;
      d.schema[i].name = std::move(names[i]);
    }
    d.observations.reserve(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const auto& row = rows[r];
      if (row.size() != width) {
        throw FormatError("row " + std::to_string(r + 1) + " has " + std::to_string(row.size()) +
                          " columns, expected " + std::to_string(width));
      }
      Observation obs;
      obs.id = static_cast<ObsId>(r);
      obs.values.reserve(width);
      for (std::size_t i = 0; i < width; ++i) {
        auto [it, inserted] =
            lookup[i].try_emplace(row[i], static_cast<ValueId>(d.schema[i].values.size()));
        if (inserted) d.schema[i].values.push_back(row[i]);
        obs.values.push_back(it->second);
      }
      d.observations.push_back(std::move(obs));
    }
    return d;
  }
};

struct SplitResult {
  std::vector<ObsId> train;
  std::vector<ObsId> validation;
  std::vector<ObsId> test;
};

struct Ordering {
  std::vector<ObsId> permutation;

  std::size_t size() const { return permutation.size(); }

  // True when `permutation` lists every id in `ids` exactly once.
  bool is_permutation_of(std::vector<ObsId> ids) const {
    if (ids.size() != permutation.size()) return false;
    auto sorted = permutation;
    std::sort(sorted.begin(), sorted.end());
    std::sort(ids.begin(), ids.end());
    return sorted == ids;
  }

  bool is_permutation_of(std::size_t n) const {
    std::vector<ObsId> ids(n);
    std::iota(ids.begin(), ids.end(), ObsId{0});
    return is_permutation_of(std::move(ids));
  }

  bool operator==(const Ordering&) const = default;
};

namespace detail {

inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.emplace_back(line.substr(start));
      break;
    }
    fields.emplace_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

}  // namespace detail

inline Dataset parse_csv(std::istream& in, bool has_header, std::string dataset_name = "") {
  std::vector<std::string> names;
  std::vector<std::vector<std::string>> rows;
  std::string line;
  bool first = true;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = detail::split_csv_line(line);
    if (first && has_header) {
      names = std::move(fields);
      first = false;
      continue;
    }
    first = false;
    const std::size_t expected = names.empty() ? (rows.empty() ? fields.size() : rows.front().size())
                                               : names.size();
    if (fields.size() != expected) {
      throw FormatError("line " + std::to_string(line_no) + ": " + std::to_string(fields.size()) +
                        " columns, expected " + std::to_string(expected));
    }
    rows.push_back(std::move(fields));
  }
  if (rows.empty()) throw EmptyInputError("no observations in input");
  return Dataset::from_rows(std::move(names), rows, std::move(dataset_name));
}

inline Dataset load_csv(const std::string& path, bool has_header) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot open " + path);
  auto stem = path.substr(path.find_last_of('/') == std::string::npos ? 0 : path.find_last_of('/') + 1);
  return parse_csv(in, has_header, stem);
}

// n observations drawn uniformly without replacement, kept in their
// original relative order and renumbered 0..n-1.
inline Dataset subsample(const Dataset& d, std::size_t n, std::uint64_t seed) {
  if (n < 1 || n > d.size()) {
    throw ArgumentError("subsample size " + std::to_string(n) + " outside [1, " +
                        std::to_string(d.size()) + "]");
  }
  std::vector<ObsId> ids(d.size());
  std::iota(ids.begin(), ids.end(), ObsId{0});
  Rng rng(seed);
  // Partial Fisher-Yates: the first n slots are the sample.
  for (std::size_t i = 0; i < n; ++i) {
    std::swap(ids[i], ids[i + uniform_index(rng, ids.size() - i)]);
  }
  ids.resize(n);
  std::sort(ids.begin(), ids.end());

  Dataset out;
  out.name = d.name;
  out.schema = d.schema;
  out.observations.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Observation obs = d.observations[ids[i]];
    obs.id = static_cast<ObsId>(i);
    out.observations.push_back(std::move(obs));
  }
  return out;
}

// Block sizes are floor(f * n); leftover ids go round-robin to
// train, validation, test.
inline SplitResult split(const Dataset& d, std::array<double, 3> fractions, std::uint64_t seed) {
  for (double f : fractions) {
    if (!(f > 0.0)) throw ArgumentError("split fractions must be positive");
  }
  if (std::abs(fractions[0] + fractions[1] + fractions[2] - 1.0) > 1e-9) {
    throw ArgumentError("split fractions must sum to 1");
  }
  const std::size_t n = d.size();
  std::array<std::size_t, 3> sizes{};
  std::size_t assigned = 0;
  for (std::size_t b = 0; b < 3; ++b) {
    sizes[b] = static_cast<std::size_t>(std::floor(fractions[b] * static_cast<double>(n) + 1e-9));
    assigned += sizes[b];
  }
  for (std::size_t b = 0; assigned < n; b = (b + 1) % 3, ++assigned) ++sizes[b];

  std::vector<ObsId> ids(n);
  std::iota(ids.begin(), ids.end(), ObsId{0});
  Rng rng(seed);
  shuffle(std::span<ObsId>(ids), rng);

  SplitResult out;
  auto first = ids.begin();
  out.train.assign(first, first + static_cast<std::ptrdiff_t>(sizes[0]));
  first += static_cast<std::ptrdiff_t>(sizes[0]);
  out.validation.assign(first, first + static_cast<std::ptrdiff_t>(sizes[1]));
  first += static_cast<std::ptrdiff_t>(sizes[1]);
  out.test.assign(first, ids.end());
  return out;
}

inline Ordering random_ordering(std::vector<ObsId> ids, std::uint64_t seed) {
  if (ids.empty()) throw EmptyInputError("cannot order an empty id set");
  Rng rng(seed);
  shuffle(std::span<ObsId>(ids), rng);
  return Ordering{std::move(ids)};
}

inline Ordering random_ordering(const Dataset& d, std::uint64_t seed) {
  std::vector<ObsId> ids(d.size());
  std::iota(ids.begin(), ids.end(), ObsId{0});
  return random_ordering(std::move(ids), seed);
}

}  // namespace iterclust
