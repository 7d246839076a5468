#pragma once
//------------------------------------------------------------------------------
//
//   Copyright 2026 The ids-embed Authors
//
//   Licensed under the Apache License, Version 2.0 (the "License");
//   you may not use this file except in compliance with the License.
//   You may obtain a copy of the License at
//
//       http://www.apache.org/licenses/LICENSE-2.0
//
//   Unless required by applicable law or agreed to in writing, software
//   distributed under the License is distributed on an "AS IS" BASIS,
//   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//   See the License for the specific language governing permissions and
//   limitations under the License.
//
//------------------------------------------------------------------------------

#include <algorithm>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "ids_embed/common.hpp"
#include "ids_embed/error.hpp"

namespace ids_embed {

/// Token <-> dense index map for one ID type.
class TypeVocab
{
public:
  TypeVocab() = default;
  explicit TypeVocab(std::string name)
    : name_(std::move(name))
  {}

  std::string const &name() const noexcept
  {
    return name_;
  }

  std::size_t size() const noexcept
  {
    return tokens_.size();
  }

  Index add(std::string const &token, std::uint64_t frequency = 0)
  {
    auto [it, inserted] = lookup_.emplace(token, static_cast<Index>(tokens_.size()));
    if (!inserted)
    {
      throw Error(ErrorCode::InvalidArgument, "token '" + token + "' added twice to " + name_);
    }
    tokens_.push_back(token);
    frequency_.push_back(frequency);
    return it->second;
  }

  std::optional<Index> find(std::string const &token) const
  {
    auto it = lookup_.find(token);
    if (it == lookup_.end())
    {
      return std::nullopt;
    }
    return it->second;
  }

  Index index_of(std::string const &token) const
  {
    auto idx = find(token);
    if (!idx)
    {
      throw Error(ErrorCode::UnknownToken, "'" + token + "' is not a known " + name_ + " token");
    }
    return *idx;
  }

  std::string const &token(Index index) const
  {
    if (index >= tokens_.size())
    {
      throw Error(ErrorCode::IndexOutOfRange, name_ + " index " + std::to_string(index));
    }
    return tokens_[index];
  }

  std::uint64_t frequency(Index index) const
  {
    return frequency_.at(index);
  }

  void set_frequency(Index index, std::uint64_t frequency)
  {
    frequency_.at(index) = frequency;
  }

  std::vector<std::string> const &tokens() const noexcept
  {
    return tokens_;
  }

  bool operator==(TypeVocab const &other) const
  {
    return name_ == other.name_ && tokens_ == other.tokens_ && frequency_ == other.frequency_;
  }

private:
  std::string                            name_;
  std::vector<std::string>               tokens_;
  std::vector<std::uint64_t>             frequency_;
  std::unordered_map<std::string, Index> lookup_;
};

/// One TypeVocab per ID type; type 0 is always the item vocabulary, whose
/// indices follow descending session frequency.
class Vocabulary
{
public:
  Vocabulary() = default;
  explicit Vocabulary(std::vector<TypeVocab> types)
    : types_(std::move(types))
  {}

  std::size_t num_types() const noexcept
  {
    return types_.size();
  }

  TypeVocab const &type(std::size_t k) const
  {
    return types_.at(k);
  }

  TypeVocab &type(std::size_t k)
  {
    return types_.at(k);
  }

  TypeVocab const &items() const
  {
    return types_.at(kItemType);
  }

  std::vector<std::size_t> sizes() const
  {
    std::vector<std::size_t> out;
    for (auto const &t : types_)
    {
      out.push_back(t.size());
    }
    return out;
  }

  bool operator==(Vocabulary const &other) const = default;

private:
  std::vector<TypeVocab> types_;
};

/// Item -> attribute ID table with the structural weights w_ik = 1 / V_ik,
/// where V_ik is the number of distinct items sharing item i's type-k value.
class AttributeTable
{
public:
  static constexpr std::int64_t kMissing = -1;

  AttributeTable() = default;

  /// `ids` is row-major num_items x num_types; column 0 is overwritten with the
  /// item index itself. `type_sizes[k]` is D_k.
  static AttributeTable from_ids(std::size_t num_types, std::vector<std::int64_t> ids,
                                 std::vector<std::size_t> const &type_sizes)
  {
    if (num_types == 0 || type_sizes.size() != num_types || ids.size() % num_types != 0)
    {
      throw Error(ErrorCode::DimensionMismatch, "attribute table shape");
    }
    AttributeTable t;
    t.num_types_ = num_types;
    t.num_items_ = ids.size() / num_types;
    t.ids_       = std::move(ids);
    t.value_counts_.resize(num_types);
    for (std::size_t k = 0; k < num_types; ++k)
    {
      t.value_counts_[k].assign(type_sizes[k], 0);
    }
    if (type_sizes[0] != t.num_items_)
    {
      throw Error(ErrorCode::DimensionMismatch, "item vocabulary size differs from table rows");
    }
    for (std::size_t i = 0; i < t.num_items_; ++i)
    {
      t.ids_[i * num_types] = static_cast<std::int64_t>(i);
      for (std::size_t k = 0; k < num_types; ++k)
      {
        auto const v = t.ids_[i * num_types + k];
        if (v == kMissing)
        {
          continue;
        }
        if (v < 0 || static_cast<std::size_t>(v) >= type_sizes[k])
        {
          throw Error(ErrorCode::IndexOutOfRange, "attribute value out of range for type " +
                                                      std::to_string(k));
        }
        ++t.value_counts_[k][static_cast<std::size_t>(v)];
      }
    }
    t.weights_.assign(t.ids_.size(), 0.0);
    for (std::size_t i = 0; i < t.num_items_; ++i)
    {
      for (std::size_t k = 0; k < num_types; ++k)
      {
        auto const v = t.ids_[i * num_types + k];
        if (v != kMissing)
        {
          t.weights_[i * num_types + k] =
              1.0 / static_cast<double>(t.value_counts_[k][static_cast<std::size_t>(v)]);
        }
      }
    }
    return t;
  }

  /// Same as from_ids but with caller-supplied weights (used to probe the model
  /// with arbitrary w_ik). Missing entries must carry weight 0.
  static AttributeTable with_weights(std::size_t num_types, std::vector<std::int64_t> ids,
                                     std::vector<std::size_t> const &type_sizes,
                                     std::vector<double> weights)
  {
    AttributeTable t = from_ids(num_types, std::move(ids), type_sizes);
    if (weights.size() != t.weights_.size())
    {
      throw Error(ErrorCode::DimensionMismatch, "weights shape");
    }
    t.weights_ = std::move(weights);
    return t;
  }

  std::size_t num_items() const noexcept
  {
    return num_items_;
  }

  std::size_t num_types() const noexcept
  {
    return num_types_;
  }

  bool has(Index item, std::size_t k) const
  {
    return raw(item, k) != kMissing;
  }

  std::optional<Index> id(Index item, std::size_t k) const
  {
    auto const v = raw(item, k);
    if (v == kMissing)
    {
      return std::nullopt;
    }
    return static_cast<Index>(v);
  }

  std::int64_t raw(Index item, std::size_t k) const
  {
    return ids_.at(static_cast<std::size_t>(item) * num_types_ + k);
  }

  double weight(Index item, std::size_t k) const
  {
    return weights_.at(static_cast<std::size_t>(item) * num_types_ + k);
  }

  /// V_ik; 0 for a missing attribute.
  std::size_t group_size(Index item, std::size_t k) const
  {
    auto const v = raw(item, k);
    return v == kMissing ? 0 : value_counts_[k][static_cast<std::size_t>(v)];
  }

  /// Number of items holding `value` as their type-k attribute.
  std::size_t value_count(std::size_t k, Index value) const
  {
    return value_counts_.at(k).at(value);
  }

  bool operator==(AttributeTable const &other) const = default;

private:
  std::size_t                           num_items_ = 0;
  std::size_t                           num_types_ = 0;
  std::vector<std::int64_t>             ids_;
  std::vector<double>                   weights_;
  std::vector<std::vector<std::size_t>> value_counts_;
};

struct SessionCorpus
{
  std::vector<std::vector<Index>> sessions;
  std::size_t                     skipped_empty   = 0;
  std::size_t                     dropped_unknown = 0;

  std::size_t total_tokens() const
  {
    std::size_t n = 0;
    for (auto const &s : sessions)
    {
      n += s.size();
    }
    return n;
  }
};

enum class UnknownTokenPolicy
{
  Strict,
  Lenient,
};

namespace detail {

inline void strip_cr(std::string &line)
{
  if (!line.empty() && line.back() == '\r')
  {
    line.pop_back();
  }
}

inline std::vector<std::string> split(std::string const &line, char sep, bool skip_empty)
{
  std::vector<std::string> out;
  std::size_t              start = 0;
  while (true)
  {
    auto const pos   = line.find(sep, start);
    auto       field = line.substr(start, pos == std::string::npos ? std::string::npos : pos - start);
    if (!(skip_empty && field.empty()))
    {
      out.push_back(std::move(field));
    }
    if (pos == std::string::npos)
    {
      break;
    }
    start = pos + 1;
  }
  return out;
}

inline std::ifstream open_input(std::string const &path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
  {
    throw Error(ErrorCode::Io, "cannot open '" + path + "'");
  }
  return in;
}

inline std::string read_file(std::string const &path)
{
  auto               in = open_input(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace detail

inline constexpr std::string_view kAttributeHeader =
    "item_id\tproduct_id\tstore_id\tbrand_id\tcate1\tcate2\tcate3";

/// One parsed row of the attributes file; empty strings mark missing fields.
struct AttributeRow
{
  std::array<std::string, kNumIdTypes> fields;
};

inline std::vector<AttributeRow> parse_attribute_rows(std::istream &in)
{
  std::string line;
  if (!std::getline(in, line))
  {
    throw Error(ErrorCode::EmptyInput, "attributes file has no header");
  }
  detail::strip_cr(line);
  if (line != kAttributeHeader)
  {
    throw Error(ErrorCode::MalformedLine, "attributes header must be '" +
                                              std::string(kAttributeHeader) + "'");
  }
  std::vector<AttributeRow> rows;
  std::size_t               line_no = 1;
  while (std::getline(in, line))
  {
    ++line_no;
    detail::strip_cr(line);
    if (line.empty())
    {
      continue;
    }
    auto fields = detail::split(line, '\t', false);
    if (fields.size() != kNumIdTypes)
    {
      throw Error(ErrorCode::MalformedLine, "attributes line " + std::to_string(line_no) +
                                                " has " + std::to_string(fields.size()) +
                                                " columns, expected 7");
    }
    if (fields[0].empty())
    {
      throw Error(ErrorCode::MalformedLine,
                  "attributes line " + std::to_string(line_no) + " has no item id");
    }
    AttributeRow row;
    std::move(fields.begin(), fields.end(), row.fields.begin());
    rows.push_back(std::move(row));
  }
  return rows;
}

/// Builds all seven vocabularies. Items are ranked by descending session
/// frequency (ties: ascending token); items seen only in the attributes file
/// follow with frequency 0. Attribute values are indexed by first appearance.
inline Vocabulary build_vocabulary(std::istream &sessions, std::istream &attributes)
{
  std::map<std::string, std::uint64_t> counts;
  std::string                          line;
  while (std::getline(sessions, line))
  {
    detail::strip_cr(line);
    for (auto const &tok : detail::split(line, ' ', true))
    {
      ++counts[tok];
    }
  }

  auto const rows = parse_attribute_rows(attributes);
  std::unordered_map<std::string, bool> seen_rows;
  for (auto const &row : rows)
  {
    if (!seen_rows.emplace(row.fields[0], true).second)
    {
      throw Error(ErrorCode::DuplicateItem, "item '" + row.fields[0] + "' listed twice");
    }
    counts.emplace(row.fields[0], 0);
  }

  std::vector<std::pair<std::string, std::uint64_t>> ranked(counts.begin(), counts.end());
  // counts is already ordered by token, so a stable sort keeps the tie rule.
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](auto const &a, auto const &b) { return a.second > b.second; });

  std::vector<TypeVocab> types;
  for (auto name : kIdTypeNames)
  {
    types.emplace_back(std::string(name));
  }
  for (auto const &[tok, n] : ranked)
  {
    types[kItemType].add(tok, n);
  }
  for (auto const &row : rows)
  {
    for (std::size_t k = 1; k < kNumIdTypes; ++k)
    {
      auto const &value = row.fields[k];
      if (value.empty())
      {
        continue;
      }
      auto idx = types[k].find(value);
      if (!idx)
      {
        idx = types[k].add(value, 0);
      }
      types[k].set_frequency(*idx, types[k].frequency(*idx) + 1);
    }
  }
  return Vocabulary(std::move(types));
}

inline Vocabulary build_vocabulary(std::string const &session_path, std::string const &attribute_path)
{
  auto s = detail::open_input(session_path);
  auto a = detail::open_input(attribute_path);
  return build_vocabulary(s, a);
}

inline SessionCorpus load_sessions(std::istream &in, Vocabulary const &vocab,
                                   UnknownTokenPolicy policy = UnknownTokenPolicy::Strict)
{
  SessionCorpus corpus;
  std::string   line;
  std::size_t   line_no = 0;
  std::size_t   lines   = 0;
  while (std::getline(in, line))
  {
    ++line_no;
    ++lines;
    detail::strip_cr(line);
    std::vector<Index> session;
    for (auto const &tok : detail::split(line, ' ', true))
    {
      auto idx = vocab.items().find(tok);
      if (!idx)
      {
        if (policy == UnknownTokenPolicy::Strict)
        {
          throw Error(ErrorCode::UnknownToken,
                      "'" + tok + "' on sessions line " + std::to_string(line_no));
        }
        ++corpus.dropped_unknown;
        continue;
      }
      session.push_back(*idx);
    }
    if (session.empty())
    {
      ++corpus.skipped_empty;
      continue;
    }
    corpus.sessions.push_back(std::move(session));
  }
  if (lines == 0)
  {
    throw Error(ErrorCode::EmptyInput, "sessions file is empty");
  }
  if (corpus.skipped_empty > 0)
  {
    warn("skipped " + std::to_string(corpus.skipped_empty) + " empty session line(s)");
  }
  if (corpus.dropped_unknown > 0)
  {
    warn("dropped " + std::to_string(corpus.dropped_unknown) + " unknown token(s)");
  }
  return corpus;
}

inline SessionCorpus load_sessions(std::string const &path, Vocabulary const &vocab,
                                   UnknownTokenPolicy policy = UnknownTokenPolicy::Strict)
{
  auto in = detail::open_input(path);
  return load_sessions(in, vocab, policy);
}

inline AttributeTable attribute_table_from_rows(std::vector<AttributeRow> const &rows,
                                                Vocabulary const &vocab)
{
  std::size_t const         num_items = vocab.items().size();
  std::vector<std::int64_t> ids(num_items * kNumIdTypes, AttributeTable::kMissing);
  for (auto const &row : rows)
  {
    Index const item = vocab.items().index_of(row.fields[0]);
    for (std::size_t k = 1; k < kNumIdTypes; ++k)
    {
      if (!row.fields[k].empty())
      {
        ids[item * kNumIdTypes + k] = vocab.type(k).index_of(row.fields[k]);
      }
    }
  }
  return AttributeTable::from_ids(kNumIdTypes, std::move(ids), vocab.sizes());
}

inline AttributeTable load_attributes(std::istream &in, Vocabulary const &vocab)
{
  return attribute_table_from_rows(parse_attribute_rows(in), vocab);
}

inline AttributeTable load_attributes(std::string const &path, Vocabulary const &vocab)
{
  auto in = detail::open_input(path);
  return load_attributes(in, vocab);
}

/// Serializes a table back to the attributes file format, one row per item in
/// index order.
inline std::string format_attributes(AttributeTable const &attrs, Vocabulary const &vocab)
{
  std::string out(kAttributeHeader);
  out += '\n';
  for (Index i = 0; i < attrs.num_items(); ++i)
  {
    out += vocab.items().token(i);
    for (std::size_t k = 1; k < attrs.num_types(); ++k)
    {
      out += '\t';
      if (auto v = attrs.id(i, k))
      {
        out += vocab.type(k).token(*v);
      }
    }
    out += '\n';
  }
  return out;
}

}  // namespace ids_embed
