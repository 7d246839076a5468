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

#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "test_support.hpp"

using namespace ids_embed;
namespace t  = ids_embed::testing;
namespace fs = std::filesystem;

namespace {

Model trained_model()
{
  SyntheticSpec spec;
  spec.sessions = 40;
  auto data     = t::load_corpus(generate_synthetic(spec));
  Hyperparams hp;
  hp.dims   = {6, 4, 2, 3, 2, 2, 3};
  hp.epochs = 1;
  auto r    = train(data.corpus, data.attrs, data.vocab, hp);
  return Model{std::move(r.space), std::move(data.vocab), std::move(data.attrs), hp};
}

void expect_load_error(fs::path const &dir, ErrorCode code)
{
  try
  {
    load_model(dir);
    FAIL() << "expected " << to_string(code);
  }
  catch (Error const &e)
  {
    EXPECT_EQ(e.code(), code) << e.what();
  }
}

void replace_first_line(fs::path const &file, std::string const &line)
{
  auto text = t::slurp(file);
  t::spit(file, line + text.substr(text.find('\n')));
}

}  // namespace

TEST(ModelIo, RoundTrip)
{
  t::TempDir  dir;
  Model const m = trained_model();
  save_model(m, dir.path());
  Model const back = load_model(dir.path());
  for (std::size_t k = 0; k < kNumIdTypes; ++k)
  {
    EXPECT_LE(t::max_abs_diff(m.space.target[k], back.space.target[k]), 1e-6);
    EXPECT_LE(t::max_abs_diff(m.space.context[k], back.space.context[k]), 1e-6);
    EXPECT_LE(t::max_abs_diff(m.space.transform[k], back.space.transform[k]), 1e-6);
  }
  // %.17g text round-trips doubles exactly.
  EXPECT_TRUE(m.space == back.space);
  EXPECT_EQ(m.vocab, back.vocab);
  EXPECT_EQ(m.attrs, back.attrs);
  EXPECT_EQ(back.hyperparams.dims, m.hyperparams.dims);
  EXPECT_EQ(back.hyperparams.window, 4u);
}

TEST(ModelIo, SavingTwiceIsByteIdentical)
{
  t::TempDir  a, b;
  Model const m = trained_model();
  save_model(m, a.path());
  save_model(m, b.path());
  std::size_t files = 0;
  for (auto const &entry : fs::directory_iterator(a.path()))
  {
    ++files;
    EXPECT_EQ(t::slurp(entry.path()), t::slurp(b / entry.path().filename().string())) << entry.path();
  }
  EXPECT_EQ(files, 7u * 2 + 6 + 3);
}

TEST(ModelIo, EmbeddingFileFormat)
{
  std::vector<std::size_t> const sizes{2, 1, 1, 1, 1, 1, 1};
  std::vector<std::size_t> const dims{2, 1, 1, 1, 1, 1, 1};
  Rng                            rng(1);
  Model                          m = t::random_model(sizes, dims, rng);
  m.space.target[0] << 0.5, -1.25, 1e-10, 3.0;
  t::TempDir dir;
  save_model(m, dir.path());
  std::istringstream in(t::slurp(dir / "target_item.txt"));
  std::string        line;
  std::vector<std::string> lines;
  while (std::getline(in, line)) lines.push_back(line);
  ASSERT_EQ(lines.size(), 3u);
  EXPECT_EQ(lines[0], "2 2");
  EXPECT_EQ(lines[1], "i0 0.5 -1.25");
  EXPECT_EQ(lines[2].substr(0, 3), "i1 ");
  std::istringstream row(lines[2]);
  std::string        tok;
  double             a = 0, b = 0;
  row >> tok >> a >> b;
  EXPECT_EQ(a, 1e-10);
  EXPECT_EQ(b, 3.0);

  auto const transform = t::slurp(dir / "transform_product.txt");
  EXPECT_EQ(transform.substr(0, transform.find('\n')), "2 1");
}

TEST(ModelIo, ManifestRecordsDefaults)
{
  t::TempDir dir;
  save_model(trained_model(), dir.path());
  auto const kv = detail::parse_manifest(t::slurp(dir / "manifest.txt"));
  EXPECT_EQ(kv.at("alpha"), "1.0");
  EXPECT_EQ(kv.at("beta"), "0.01");
  EXPECT_EQ(kv.at("window"), "4");
  EXPECT_EQ(kv.at("negatives"), "2");
  EXPECT_EQ(kv.at("batch_size"), "128");
  EXPECT_EQ(kv.at("format"), std::string(kBundleFormat));
  EXPECT_EQ(kv.at("dims"), "6,4,2,3,2,2,3");
  EXPECT_EQ(kv.count("attributes_hash"), 1u);
}

TEST(ModelIo, TamperedHeaderRejected)
{
  std::vector<std::size_t> const sizes{2, 1, 1, 1, 1, 1, 1};
  std::vector<std::size_t> const dims{2, 1, 1, 1, 1, 1, 1};
  Rng                            rng(2);
  t::TempDir                     dir;
  save_model(t::random_model(sizes, dims, rng), dir.path());
  replace_first_line(dir / "target_item.txt", "2 3");
  expect_load_error(dir.path(), ErrorCode::DimensionMismatch);
}

TEST(ModelIo, MissingTransformRejected)
{
  t::TempDir dir;
  save_model(trained_model(), dir.path());
  fs::remove(dir / "transform_product.txt");
  expect_load_error(dir.path(), ErrorCode::IncompleteBundle);
}

TEST(ModelIo, TokenCountMismatchRejected)
{
  t::TempDir dir;
  save_model(trained_model(), dir.path());
  auto text = t::slurp(dir / "context_brand.txt");
  text      = text.substr(0, text.rfind('\n', text.size() - 2) + 1);
  t::spit(dir / "context_brand.txt", text);
  expect_load_error(dir.path(), ErrorCode::DimensionMismatch);
}

TEST(ModelIo, ManifestShapeMismatchRejected)
{
  t::TempDir dir;
  save_model(trained_model(), dir.path());
  auto text = t::slurp(dir / "manifest.txt");
  auto pos  = text.find("dims=6,");
  text.replace(pos, 7, "dims=5,");
  t::spit(dir / "manifest.txt", text);
  expect_load_error(dir.path(), ErrorCode::DimensionMismatch);
}

TEST(ModelIo, AttributeDriftRejected)
{
  t::TempDir dir;
  save_model(trained_model(), dir.path());
  auto text = t::slurp(dir / "attributes.tsv");
  t::spit(dir / "attributes.tsv", text + "\n");
  expect_load_error(dir.path(), ErrorCode::IncompleteBundle);
}

TEST(ModelIo, MissingDirectoryRejected)
{
  expect_load_error("/nonexistent/bundle", ErrorCode::IncompleteBundle);
}

TEST(ModelIo, NonNumericEntryRejected)
{
  t::TempDir dir;
  save_model(trained_model(), dir.path());
  auto text = t::slurp(dir / "target_store.txt");
  auto pos  = text.find('\n') + 1;
  pos       = text.find(' ', pos) + 1;
  text.replace(pos, 1, "x");
  t::spit(dir / "target_store.txt", text);
  EXPECT_THROW(load_model(dir.path()), Error);
}

TEST(ModelIo, OnlySevenTypeModelsSave)
{
  Model m;
  m.space = EmbeddingSpace::zeros({2}, {2});
  t::TempDir dir;
  EXPECT_THROW(save_model(m, dir.path()), Error);
}

TEST(ModelIo, LoadedModelAnswersQueries)
{
  t::TempDir  dir;
  Model const m = trained_model();
  save_model(m, dir.path());
  Model const back = load_model(dir.path());
  auto const  a    = top_n_similar(m, "c0_i000", 5);
  auto const  b    = top_n_similar(back, "c0_i000", 5);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].token, b[i].token);
}
