#include <doctest.h>

#include <cmath>
#include <numeric>

#include "testutil.hpp"
#include "tglink/channels.hpp"

using namespace tglink;
using tglink::testing::random_graph;

namespace {

// Hand-built sequence with no sampling involved: timestamps ascend, the last
// slot is the query.
LinkSequence manual_sequence(const std::vector<Link>& links, int pad_count = 0) {
  LinkSequence seq;
  seq.pad_count = pad_count;
  for (int i = 0; i < pad_count; ++i) seq.slots.push_back(SeqSlot{});
  for (size_t i = 0; i < links.size(); ++i) {
    seq.slots.push_back({links[i], static_cast<int64_t>(i),
                         i + 1 == links.size() ? SlotOrigin::Query : SlotOrigin::Nearest});
  }
  return seq;
}

LinkSequence random_sequence(Rng& rng, int l, int nodes, int pad_count = -1) {
  if (pad_count < 0) pad_count = static_cast<int>(rng.uniform_index(l));  // may pad everything but the query
  std::vector<Link> links;
  const int real = l - pad_count;
  for (int i = 0; i < real; ++i) {
    links.push_back({static_cast<NodeId>(rng.uniform_index(nodes)),
                     static_cast<NodeId>(rng.uniform_index(nodes)),
                     static_cast<double>(i) + rng.uniform01()});
  }
  return manual_sequence(links, pad_count);
}

// Partition of the 2l (source, destination) id slots into equal-id classes,
// computed directly from the ids; pad slots are singletons excluded.
std::vector<int> direct_partition(const LinkSequence& seq) {
  const int l = seq.length();
  std::vector<int64_t> ids(2 * static_cast<size_t>(l), -1);
  for (int i = 0; i < l; ++i) {
    if (seq.is_pad(i)) continue;
    ids[static_cast<size_t>(i)] = seq.slots[static_cast<size_t>(i)].link.source;
    ids[static_cast<size_t>(l + i)] = seq.slots[static_cast<size_t>(i)].link.destination;
  }
  std::vector<int> cls(2 * static_cast<size_t>(l), -1);
  int next = 0;
  for (size_t a = 0; a < ids.size(); ++a) {
    if (ids[a] < 0 || cls[a] >= 0) continue;
    cls[a] = next;
    for (size_t b = a + 1; b < ids.size(); ++b) {
      if (ids[b] == ids[a]) cls[b] = next;
    }
    ++next;
  }
  return cls;
}

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(static_cast<size_t>(n)) {
    std::iota(parent.begin(), parent.end(), 0);
  }
  int find(int x) { return parent[static_cast<size_t>(x)] == x ? x : parent[static_cast<size_t>(x)] = find(parent[static_cast<size_t>(x)]); }
  void unite(int a, int b) { parent[static_cast<size_t>(find(a))] = find(b); }
};

// Recovers the slot-equality partition from the three raw identity channels.
std::vector<int> recovered_partition(const LinkSequence& seq) {
  const int l = seq.length();
  const auto src = source_ids(seq);
  const auto dst = destination_ids(seq);
  const auto ch_s = identity_channel<double>(src, src);
  const auto ch_o = identity_channel<double>(dst, dst);
  const auto ch_so = identity_channel<double>(src, dst);
  UnionFind uf(2 * l);
  for (int i = 0; i < l; ++i) {
    for (int j = 0; j < l; ++j) {
      if (ch_s(i, j) == 1.0) uf.unite(i, j);
      if (ch_o(i, j) == 1.0) uf.unite(l + i, l + j);
      if (ch_so(i, j) == 1.0) uf.unite(i, l + j);
    }
  }
  std::vector<int> cls(2 * static_cast<size_t>(l), -1);
  std::vector<int> remap(2 * static_cast<size_t>(l), -1);
  int next = 0;
  for (int a = 0; a < 2 * l; ++a) {
    const int slot_link = a % l;
    if (seq.is_pad(slot_link)) continue;
    const int root = uf.find(a);
    if (remap[static_cast<size_t>(root)] < 0) remap[static_cast<size_t>(root)] = next++;
    cls[static_cast<size_t>(a)] = remap[static_cast<size_t>(root)];
  }
  return cls;
}

}  // namespace

TEST_SUITE("encoder") {

TEST_CASE("time_encode") {
  Rng rng(1);
  auto p = EncoderParams<double>::init(5, 3, rng);

  SUBCASE("dt = 0 gives cos(phase)") {
    p.phase << 0.3, -0.7, 1.1;
    const auto v = time_encode(p, 0.0);
    for (int i = 0; i < 3; ++i) CHECK(v(i) == doctest::Approx(std::cos(p.phase(i))));
  }
  SUBCASE("zero phase and dt = 0 gives all ones") {
    p.phase.setZero();
    const auto v = time_encode(p, 0.0);
    for (int i = 0; i < 3; ++i) CHECK(v(i) == 1.0);
  }
  SUBCASE("scalar evaluation") {
    auto q = EncoderParams<double>::init(5, 1, rng);
    q.omega << 2.0;
    q.phase << M_PI / 2.0;
    const auto v = time_encode(q, 1.0);
    CHECK(v(0) == doctest::Approx(std::cos(2.0 + M_PI / 2.0)));
  }
}

TEST_CASE("link_embed") {
  Rng rng(2);

  SUBCASE("query link with zero embeddings and phases is all ones") {
    auto p = EncoderParams<double>::init(5, 4, rng);
    p.embeddings.setZero();
    p.phase.setZero();
    const Link q{1, 2, 7.0};
    const auto v = link_embed(p, q, 7.0, 1.0);
    for (int i = 0; i < 4; ++i) CHECK(v(i) == 1.0);
  }
  SUBCASE("scalar sum of time encoding and the two node rows") {
    auto p = EncoderParams<double>::init(5, 1, rng);
    p.omega << 1.0;
    p.phase << 0.0;
    p.embeddings.setZero();
    p.embeddings(0, 0) = 0.2;
    p.embeddings(1, 0) = 0.3;
    // cos(pi/3) = 0.5, so the embedding sums to exactly 1.0
    const Link h{0, 1, 0.0};
    const auto v = link_embed(p, h, M_PI / 3.0, 1.0);
    CHECK(v(0) == doctest::Approx(1.0));
  }
  SUBCASE("pad slots embed to zero rows") {
    auto p = EncoderParams<double>::init(5, 4, rng);
    auto seq = manual_sequence({{0, 1, 3.0}}, 2);
    const auto e = embed_sequence(p, seq, 1.0);
    CHECK(e.row(0).norm() == 0.0);
    CHECK(e.row(1).norm() == 0.0);
    CHECK(e.row(2).norm() > 0.0);
  }
  SUBCASE("unknown node ids fall back to the reserved row") {
    auto p = EncoderParams<double>::init(3, 2, rng);
    const Link weird{99, -5, 1.0};
    const auto v = link_embed(p, weird, 1.0, 1.0);
    const auto expected =
        time_encode(p, 0.0) + 2.0 * p.embeddings.row(3).transpose();
    CHECK((v - expected).norm() == 0.0);
  }
}

TEST_CASE("transductive_channel") {
  SUBCASE("zero embeddings give a zero matrix") {
    MatX<double> e = MatX<double>::Zero(4, 3);
    CHECK(transductive_channel(e).norm() == 0.0);
  }
  SUBCASE("2x2 hand computation") {
    MatX<double> e(2, 2);
    e << 1, 0, 1, 1;
    const auto ch = transductive_channel(e);
    CHECK(ch(0, 0) == 1.0);
    CHECK(ch(0, 1) == 1.0);
    CHECK(ch(1, 0) == 1.0);
    CHECK(ch(1, 1) == 2.0);
  }
  SUBCASE("always symmetric") {
    Rng rng(3);
    for (int t = 0; t < 10; ++t) {
      MatX<double> e(5, 4);
      for (int i = 0; i < e.size(); ++i) e.data()[i] = rng.gaussian();
      const auto ch = transductive_channel(e);
      CHECK((ch - ch.transpose()).norm() == 0.0);
    }
  }
}

TEST_CASE("time_channel") {
  auto seq = manual_sequence({{0, 1, 1.0}, {1, 2, 1.2}, {2, 0, 2.0}});

  SUBCASE("diagonal is one for real slots") {
    const auto ch = time_channel(seq, 5.0, 1.0);
    for (int i = 0; i < 3; ++i) CHECK(ch(i, i) == 1.0);
  }
  SUBCASE("alpha = 5 and |dt| = 0.2 give e^-1") {
    const auto ch = time_channel(seq, 5.0, 1.0);
    CHECK(ch(0, 1) == doctest::Approx(std::exp(-1.0)));
  }
  SUBCASE("larger alpha decays faster") {
    const auto a1 = time_channel(seq, 1.0, 1.0);
    const auto a10 = time_channel(seq, 10.0, 1.0);
    CHECK(a10(0, 2) < a1(0, 2));
  }
  SUBCASE("pad rows and columns are zero") {
    auto padded = manual_sequence({{0, 1, 1.0}, {1, 2, 2.0}}, 2);
    const auto ch = time_channel(padded, 5.0, 1.0);
    CHECK(ch.row(0).norm() == 0.0);
    CHECK(ch.row(1).norm() == 0.0);
    CHECK(ch.col(0).norm() == 0.0);
    CHECK(ch(2, 2) == 1.0);
  }
  SUBCASE("invariant under global time translation") {
    // Integer times and shift keep the arithmetic exact.
    auto a = manual_sequence({{0, 1, 3.0}, {1, 2, 7.0}, {2, 0, 12.0}});
    auto b = manual_sequence({{0, 1, 3.0 + 4096.0}, {1, 2, 7.0 + 4096.0}, {2, 0, 12.0 + 4096.0}});
    const auto cha = time_channel(a, 5.0, 2.0);
    const auto chb = time_channel(b, 5.0, 2.0);
    CHECK((cha - chb).norm() == 0.0);
  }
  SUBCASE("time scale divides the gaps") {
    const auto wide = time_channel(seq, 5.0, 10.0);
    CHECK(wide(0, 1) == doctest::Approx(std::exp(-5.0 * 0.02)));
  }
}

TEST_CASE("identity_channel") {
  SUBCASE("pairwise equality table") {
    const std::vector<int64_t> ids{0, 0, 1};  // [A, A, B]
    const auto ch = identity_channel<double>(ids, ids);
    MatX<double> want(3, 3);
    want << 1, 1, 0, 1, 1, 0, 0, 0, 1;
    CHECK((ch - want).norm() == 0.0);
  }
  SUBCASE("all distinct ids give the identity matrix") {
    const std::vector<int64_t> ids{4, 7, 9, 2};
    const auto ch = identity_channel<double>(ids, ids);
    CHECK((ch - MatX<double>::Identity(4, 4)).norm() == 0.0);
  }
  SUBCASE("disjoint cross call gives a zero matrix") {
    const std::vector<int64_t> a{0, 1, 2};
    const std::vector<int64_t> b{3, 4, 5};
    CHECK(identity_channel<double>(a, b).norm() == 0.0);
  }
  SUBCASE("pads never match, even each other") {
    const std::vector<int64_t> a{-1, -1, 3};
    const auto ch = identity_channel<double>(a, a);
    CHECK(ch.sum() == 1.0);
    CHECK(ch(2, 2) == 1.0);
  }
}

TEST_CASE("assemble_image") {
  Rng rng(5);
  auto p = EncoderParams<double>::init(30, 8, rng);

  SUBCASE("production shape is 5 x 13 x 13") {
    auto g = random_graph(60, 12, 4);
    const Link q = g.links()[59];
    auto seq = sample_sequence(g, q, 12, 0, 48, p, 1.0);
    auto img = assemble_image(seq, p, 5.0, 1.0);
    CHECK(img.l == 13);
    for (const auto& ch : img.ch) {
      CHECK(ch.rows() == 13);
      CHECK(ch.cols() == 13);
    }
  }
  SUBCASE("strict upper triangle is zero in every channel") {
    Rng r2(6);
    for (int t = 0; t < 20; ++t) {
      auto seq = random_sequence(r2, 6, 5);
      auto img = assemble_image(seq, p, 5.0, 1.0);
      for (const auto& ch : img.ch) {
        for (int i = 0; i < 6; ++i) {
          for (int j = i + 1; j < 6; ++j) CHECK(ch(i, j) == 0.0);
        }
      }
    }
  }
  SUBCASE("pad rows and columns are zero in every channel") {
    Rng r2(7);
    auto seq = random_sequence(r2, 7, 5, /*pad_count=*/3);
    auto img = assemble_image(seq, p, 5.0, 1.0);
    for (const auto& ch : img.ch) {
      for (int i = 0; i < 3; ++i) {
        CHECK(ch.row(i).norm() == 0.0);
        CHECK(ch.col(i).norm() == 0.0);
      }
    }
  }
  SUBCASE("cold start leaves only the query cell") {
    auto seq = manual_sequence({{2, 3, 9.0}}, 4);
    auto img = assemble_image(seq, p, 5.0, 1.0);
    const int l = 5;
    for (int c = 0; c < kNumChannels; ++c) {
      for (int i = 0; i < l; ++i) {
        for (int j = 0; j < l; ++j) {
          if (i == l - 1 && j == l - 1) continue;
          CHECK(img.ch[static_cast<size_t>(c)](i, j) == 0.0);
        }
      }
    }
    CHECK(img.ch[kChannelTime](4, 4) == 1.0);
    CHECK(img.ch[kChannelSource](4, 4) == 1.0);
    CHECK(img.ch[kChannelDest](4, 4) == 1.0);
    CHECK(img.ch[kChannelCross](4, 4) == 0.0);  // source != destination here
  }
  SUBCASE("channel 0 row l-1 equals sampler closeness") {
    auto g = random_graph(80, 10, 9);
    const Link q = g.links()[79];
    auto seq = sample_sequence(g, q, 4, 2, 16, p, 1.0);
    const auto raw = raw_channels(seq, p, 5.0, 1.0);
    const auto q_embed = link_embed(p, q, q.timestamp, 1.0);
    for (int j = seq.pad_count; j < seq.length(); ++j) {
      const auto h_embed =
          link_embed(p, seq.slots[static_cast<size_t>(j)].link, q.timestamp, 1.0);
      CHECK(raw[kChannelEmbed](seq.length() - 1, j) ==
            doctest::Approx(closeness(q_embed, h_embed)).epsilon(1e-12));
    }
  }
}

TEST_CASE("raw symmetric channels match their transpose") {
  Rng rng(11);
  auto p = EncoderParams<double>::init(20, 6, rng);
  for (int t = 0; t < 25; ++t) {
    auto seq = random_sequence(rng, 5, 6);
    const auto raw = raw_channels(seq, p, 5.0, 1.0);
    // The embedding, time and the two self identity channels are symmetric
    // by construction. The cross channel compares different id sequences and
    // is not, which is why reconstruction reads it pre-masking.
    for (int c : {kChannelEmbed, kChannelTime, kChannelSource, kChannelDest}) {
      CHECK((raw[static_cast<size_t>(c)] - raw[static_cast<size_t>(c)].transpose()).norm() ==
            0.0);
    }
  }
}

TEST_CASE("relabeling leaves the inductive channels bit-identical") {
  Rng rng(13);
  auto p = EncoderParams<double>::init(40, 6, rng);
  int checked = 0;
  for (int t = 0; t < 1000; ++t) {
    const int l = 3 + static_cast<int>(rng.uniform_index(5));
    auto seq = random_sequence(rng, l, 9);

    // Random bijection over the node alphabet.
    std::vector<NodeId> perm(40);
    std::iota(perm.begin(), perm.end(), 0);
    for (size_t i = perm.size(); i > 1; --i) {
      std::swap(perm[i - 1], perm[rng.uniform_index(i)]);
    }
    LinkSequence relabeled = seq;
    for (auto& slot : relabeled.slots) {
      if (slot.origin == SlotOrigin::Pad) continue;
      slot.link.source = perm[static_cast<size_t>(slot.link.source)];
      slot.link.destination = perm[static_cast<size_t>(slot.link.destination)];
    }

    const auto a = assemble_image(seq, p, 5.0, 1.0);
    const auto b = assemble_image(relabeled, p, 5.0, 1.0);
    for (int c : {kChannelTime, kChannelSource, kChannelDest, kChannelCross}) {
      const auto& ma = a.ch[static_cast<size_t>(c)];
      const auto& mb = b.ch[static_cast<size_t>(c)];
      for (int i = 0; i < l; ++i) {
        for (int j = 0; j < l; ++j) {
          if (ma(i, j) != mb(i, j)) {
            ++checked;  // force a visible failure with context
            CAPTURE(c);
            CAPTURE(i);
            CAPTURE(j);
            REQUIRE(ma(i, j) == mb(i, j));
          }
        }
      }
    }
  }
  CHECK(checked == 0);
}

TEST_CASE("identity channels determine the slot-equality partition (exhaustive l <= 4)") {
  // Every assignment of a 3-symbol alphabet to the 2l node slots.
  for (int l = 1; l <= 4; ++l) {
    const int combos = static_cast<int>(std::pow(9, l));
    for (int code = 0; code < combos; ++code) {
      int c = code;
      std::vector<Link> links;
      for (int i = 0; i < l; ++i) {
        links.push_back({static_cast<NodeId>(c % 3), static_cast<NodeId>((c / 3) % 3),
                         static_cast<double>(i + 1)});
        c /= 9;
      }
      const auto seq = manual_sequence(links);
      REQUIRE(recovered_partition(seq) == direct_partition(seq));
    }
  }
}

TEST_CASE("recovery also works with pad slots present") {
  Rng rng(17);
  for (int t = 0; t < 200; ++t) {
    auto seq = random_sequence(rng, 4, 3);
    REQUIRE(recovered_partition(seq) == direct_partition(seq));
  }
}

}  // TEST_SUITE
