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

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "ids_embed/common.hpp"
#include "ids_embed/corpus.hpp"
#include "ids_embed/error.hpp"
#include "ids_embed/joint_model.hpp"

namespace ids_embed {

/// A trained space together with the vocabulary and attribute table it was
/// trained against.
struct Model
{
  EmbeddingSpace space;
  Vocabulary     vocab;
  AttributeTable attrs;
  Hyperparams    hyperparams;
};

inline constexpr std::string_view kBundleFormat = "ids-embed-bundle-1";

namespace detail {

inline std::string format_double(double v)
{
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

/// Shortest text that round-trips, for manifest values. Integral values keep
/// a trailing ".0" so they still read as reals.
inline std::string format_short(double v)
{
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  std::string out(buf, end);
  if (std::isfinite(v) && out.find_first_of(".e") == std::string::npos)
  {
    out += ".0";
  }
  return out;
}

inline std::string hex64(std::uint64_t v)
{
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline std::string join_sizes(std::vector<std::size_t> const &v)
{
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i)
  {
    if (i) out += ',';
    out += std::to_string(v[i]);
  }
  return out;
}

inline std::vector<std::size_t> parse_sizes(std::string const &text)
{
  std::vector<std::size_t> out;
  for (auto const &field : split(text, ',', true))
  {
    char *end = nullptr;
    auto  v   = std::strtoull(field.c_str(), &end, 10);
    if (end == field.c_str() || *end != '\0')
    {
      throw Error(ErrorCode::MalformedLine, "bad integer list '" + text + "'");
    }
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

inline double parse_double(std::string const &text)
{
  char  *end = nullptr;
  double v   = std::strtod(text.c_str(), &end);
  if (end == text.c_str() || *end != '\0')
  {
    throw Error(ErrorCode::MalformedLine, "bad number '" + text + "'");
  }
  return v;
}

inline void write_file(std::filesystem::path const &path, std::string const &content)
{
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
  {
    throw Error(ErrorCode::Io, "cannot write '" + path.string() + "'");
  }
  out << content;
  if (!out)
  {
    throw Error(ErrorCode::Io, "write failed for '" + path.string() + "'");
  }
}

inline std::string read_bundle_file(std::filesystem::path const &path)
{
  if (!std::filesystem::exists(path))
  {
    throw Error(ErrorCode::IncompleteBundle, "missing '" + path.string() + "'");
  }
  return read_file(path.string());
}

inline std::uint64_t vocab_hash(TypeVocab const &v)
{
  std::string all;
  for (auto const &t : v.tokens())
  {
    all += t;
    all += '\n';
  }
  return fnv1a64(all);
}

inline std::string format_embedding(Matrix const &m, TypeVocab const &vocab)
{
  std::string out = std::to_string(m.rows()) + " " + std::to_string(m.cols()) + "\n";
  for (Eigen::Index r = 0; r < m.rows(); ++r)
  {
    out += vocab.token(static_cast<Index>(r));
    for (Eigen::Index c = 0; c < m.cols(); ++c)
    {
      out += ' ';
      out += format_double(m(r, c));
    }
    out += '\n';
  }
  return out;
}

inline std::string format_transform(Matrix const &m)
{
  std::string out = std::to_string(m.rows()) + " " + std::to_string(m.cols()) + "\n";
  for (Eigen::Index r = 0; r < m.rows(); ++r)
  {
    for (Eigen::Index c = 0; c < m.cols(); ++c)
    {
      if (c) out += ' ';
      out += format_double(m(r, c));
    }
    out += '\n';
  }
  return out;
}

inline std::pair<std::size_t, std::size_t> parse_header(std::string const &line, std::string const &what)
{
  auto fields = split(line, ' ', true);
  if (fields.size() != 2)
  {
    throw Error(ErrorCode::MalformedLine, what + ": header must be '<rows> <cols>'");
  }
  auto sizes = parse_sizes(fields[0] + "," + fields[1]);
  return {sizes[0], sizes[1]};
}

/// Parses "<rows> <cols>" then rows of optional token + cols numbers.
inline Matrix parse_matrix(std::string const &text, std::string const &what, bool with_tokens,
                           std::vector<std::string> *tokens)
{
  std::istringstream in(text);
  std::string        line;
  if (!std::getline(in, line))
  {
    throw Error(ErrorCode::MalformedLine, what + ": empty file");
  }
  strip_cr(line);
  auto const [rows, cols] = parse_header(line, what);
  Matrix      m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  std::size_t r = 0;
  while (std::getline(in, line))
  {
    strip_cr(line);
    if (line.empty())
    {
      continue;
    }
    if (r >= rows)
    {
      throw Error(ErrorCode::DimensionMismatch, what + ": more than " + std::to_string(rows) + " rows");
    }
    auto              fields = split(line, ' ', true);
    std::size_t const skip   = with_tokens ? 1 : 0;
    if (fields.size() != cols + skip)
    {
      throw Error(ErrorCode::DimensionMismatch, what + ": row " + std::to_string(r + 1) + " has " +
                                                    std::to_string(fields.size() - std::min(fields.size(), skip)) +
                                                    " values, header says " + std::to_string(cols));
    }
    if (with_tokens && tokens)
    {
      tokens->push_back(fields[0]);
    }
    for (std::size_t c = 0; c < cols; ++c)
    {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = parse_double(fields[c + skip]);
    }
    ++r;
  }
  if (r != rows)
  {
    throw Error(ErrorCode::DimensionMismatch,
                what + ": header says " + std::to_string(rows) + " rows, found " + std::to_string(r));
  }
  return m;
}

inline std::map<std::string, std::string> parse_manifest(std::string const &text)
{
  std::map<std::string, std::string> kv;
  std::istringstream                 in(text);
  std::string                        line;
  while (std::getline(in, line))
  {
    strip_cr(line);
    if (line.empty() || line[0] == '#')
    {
      continue;
    }
    auto const eq = line.find('=');
    if (eq == std::string::npos)
    {
      throw Error(ErrorCode::MalformedLine, "manifest line '" + line + "'");
    }
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

inline std::string const &require(std::map<std::string, std::string> const &kv, std::string const &key)
{
  auto it = kv.find(key);
  if (it == kv.end())
  {
    throw Error(ErrorCode::IncompleteBundle, "manifest lacks '" + key + "'");
  }
  return it->second;
}

}  // namespace detail

inline std::string embedding_file_name(std::string_view kind, std::size_t k)
{
  return std::string(kind) + "_" + std::string(kIdTypeNames.at(k)) + ".txt";
}

/// Writes the bundle: target_/context_<type>.txt, transform_<type>.txt for
/// every attribute type, attributes.tsv, item_frequencies.txt, manifest.txt.
inline void save_model(Model const &model, std::filesystem::path const &dir)
{
  auto const &space = model.space;
  auto const  K     = space.num_types();
  if (K != kNumIdTypes || model.vocab.num_types() != K || model.attrs.num_types() != K)
  {
    throw Error(ErrorCode::DimensionMismatch, "bundles hold exactly seven ID types");
  }
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec)
  {
    throw Error(ErrorCode::Io, "cannot create '" + dir.string() + "': " + ec.message());
  }

  for (std::size_t k = 0; k < K; ++k)
  {
    if (static_cast<std::size_t>(space.target[k].rows()) != model.vocab.type(k).size())
    {
      throw Error(ErrorCode::DimensionMismatch, "vocabulary size differs for " + model.vocab.type(k).name());
    }
    detail::write_file(dir / embedding_file_name("target", k),
                       detail::format_embedding(space.target[k], model.vocab.type(k)));
    detail::write_file(dir / embedding_file_name("context", k),
                       detail::format_embedding(space.context[k], model.vocab.type(k)));
    if (k > 0)
    {
      detail::write_file(dir / embedding_file_name("transform", k), detail::format_transform(space.transform[k]));
    }
  }

  std::string const attributes = format_attributes(model.attrs, model.vocab);
  detail::write_file(dir / "attributes.tsv", attributes);

  std::string freqs;
  for (Index i = 0; i < model.vocab.items().size(); ++i)
  {
    freqs += model.vocab.items().token(i) + " " + std::to_string(model.vocab.items().frequency(i)) + "\n";
  }
  detail::write_file(dir / "item_frequencies.txt", freqs);

  auto const &hp = model.hyperparams;
  std::string manifest;
  auto        put = [&](std::string const &k, std::string const &v) { manifest += k + "=" + v + "\n"; };
  put("format", std::string(kBundleFormat));
  put("num_types", std::to_string(K));
  put("dims", detail::join_sizes(space.dims()));
  put("sizes", detail::join_sizes(space.type_sizes()));
  put("window", std::to_string(hp.window));
  put("negatives", std::to_string(hp.negatives));
  put("alpha", detail::format_short(hp.alpha));
  put("beta", detail::format_short(hp.beta));
  put("batch_size", std::to_string(hp.batch_size));
  put("epochs", std::to_string(hp.epochs));
  put("learning_rate", detail::format_short(hp.learning_rate));
  put("seed", std::to_string(hp.seed));
  put("attributes_hash", detail::hex64(fnv1a64(attributes)));
  for (std::size_t k = 0; k < K; ++k)
  {
    put("vocab_hash_" + std::string(kIdTypeNames[k]), detail::hex64(detail::vocab_hash(model.vocab.type(k))));
  }
  detail::write_file(dir / "manifest.txt", manifest);
}

inline Model load_model(std::filesystem::path const &dir)
{
  if (!std::filesystem::is_directory(dir))
  {
    throw Error(ErrorCode::IncompleteBundle, "'" + dir.string() + "' is not a directory");
  }
  auto const kv = detail::parse_manifest(detail::read_bundle_file(dir / "manifest.txt"));
  if (detail::require(kv, "format") != kBundleFormat)
  {
    throw Error(ErrorCode::IncompleteBundle, "unsupported bundle format");
  }
  auto const dims  = detail::parse_sizes(detail::require(kv, "dims"));
  auto const sizes = detail::parse_sizes(detail::require(kv, "sizes"));
  if (dims.size() != kNumIdTypes || sizes.size() != kNumIdTypes)
  {
    throw Error(ErrorCode::DimensionMismatch, "manifest must list seven dims and sizes");
  }

  Model                  model;
  std::vector<TypeVocab> types;
  model.space = EmbeddingSpace::zeros(sizes, dims);
  for (std::size_t k = 0; k < kNumIdTypes; ++k)
  {
    std::string const         name(kIdTypeNames[k]);
    std::vector<std::string>  target_tokens;
    std::vector<std::string>  context_tokens;
    auto const target_file  = embedding_file_name("target", k);
    auto const context_file = embedding_file_name("context", k);
    Matrix target  = detail::parse_matrix(detail::read_bundle_file(dir / target_file), target_file, true, &target_tokens);
    Matrix context = detail::parse_matrix(detail::read_bundle_file(dir / context_file), context_file, true, &context_tokens);
    auto   check   = [&](Matrix const &m, std::string const &file) {
      if (static_cast<std::size_t>(m.rows()) != sizes[k] || static_cast<std::size_t>(m.cols()) != dims[k])
      {
        throw Error(ErrorCode::DimensionMismatch, file + " shape disagrees with manifest");
      }
    };
    check(target, target_file);
    check(context, context_file);
    if (target_tokens != context_tokens)
    {
      throw Error(ErrorCode::DimensionMismatch, "token order differs between target and context files for " + name);
    }
    TypeVocab vocab(name);
    for (auto const &t : target_tokens)
    {
      vocab.add(t, 0);
    }
    if (detail::hex64(detail::vocab_hash(vocab)) != detail::require(kv, "vocab_hash_" + name))
    {
      throw Error(ErrorCode::IncompleteBundle, "vocabulary hash mismatch for " + name);
    }
    model.space.target[k]  = std::move(target);
    model.space.context[k] = std::move(context);
    if (k > 0)
    {
      auto const file = embedding_file_name("transform", k);
      Matrix     m    = detail::parse_matrix(detail::read_bundle_file(dir / file), file, false, nullptr);
      if (static_cast<std::size_t>(m.rows()) != dims[0] || static_cast<std::size_t>(m.cols()) != dims[k])
      {
        throw Error(ErrorCode::DimensionMismatch, file + " shape disagrees with manifest");
      }
      model.space.transform[k] = std::move(m);
    }
    types.push_back(std::move(vocab));
  }

  std::istringstream freqs(detail::read_bundle_file(dir / "item_frequencies.txt"));
  std::string        line;
  Index              row = 0;
  while (std::getline(freqs, line))
  {
    detail::strip_cr(line);
    if (line.empty()) continue;
    auto fields = detail::split(line, ' ', true);
    if (fields.size() != 2 || row >= types[0].size() || types[0].token(row) != fields[0])
    {
      throw Error(ErrorCode::DimensionMismatch, "item_frequencies.txt disagrees with item embeddings");
    }
    types[0].set_frequency(row, detail::parse_sizes(fields[1]).at(0));
    ++row;
  }
  if (row != types[0].size())
  {
    throw Error(ErrorCode::DimensionMismatch, "item_frequencies.txt has " + std::to_string(row) + " rows");
  }

  std::string const attributes = detail::read_bundle_file(dir / "attributes.tsv");
  if (detail::hex64(fnv1a64(attributes)) != detail::require(kv, "attributes_hash"))
  {
    throw Error(ErrorCode::IncompleteBundle, "attributes.tsv does not match the manifest hash");
  }
  std::istringstream attr_in(attributes);
  auto const         rows = parse_attribute_rows(attr_in);
  // Attribute-type frequencies are the number of items holding each value.
  for (auto const &r : rows)
  {
    for (std::size_t k = 1; k < kNumIdTypes; ++k)
    {
      if (!r.fields[k].empty())
      {
        Index const v = types[k].index_of(r.fields[k]);
        types[k].set_frequency(v, types[k].frequency(v) + 1);
      }
    }
  }
  model.vocab = Vocabulary(std::move(types));
  model.attrs = attribute_table_from_rows(rows, model.vocab);

  auto &hp         = model.hyperparams;
  hp.dims          = dims;
  hp.window        = detail::parse_sizes(detail::require(kv, "window")).at(0);
  hp.negatives     = detail::parse_sizes(detail::require(kv, "negatives")).at(0);
  hp.alpha         = detail::parse_double(detail::require(kv, "alpha"));
  hp.beta          = detail::parse_double(detail::require(kv, "beta"));
  hp.batch_size    = detail::parse_sizes(detail::require(kv, "batch_size")).at(0);
  hp.epochs        = detail::parse_sizes(detail::require(kv, "epochs")).at(0);
  hp.learning_rate = detail::parse_double(detail::require(kv, "learning_rate"));
  hp.seed          = std::strtoull(detail::require(kv, "seed").c_str(), nullptr, 10);
  return model;
}

}  // namespace ids_embed
