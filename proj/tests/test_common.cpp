#include "doctest.h"

#include <cstring>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "camfp/common/error.hpp"
#include "camfp/common/fft.hpp"
#include "camfp/common/parallel.hpp"
#include "camfp/common/rng.hpp"
#include "camfp/common/tensor_file.hpp"
#include "support/oracles.hpp"

using namespace camfp;

TEST_SUITE("common") {

TEST_CASE("tensor file header layout is fixed") {
    std::ostringstream out;
    const std::uint64_t shape[2] = {2, 3};
    const float vals[6] = {1, 2, 3, 4, 5, 6};
    write_tensor(out, shape, std::span<const float>(vals));
    const std::string b = out.str();
    REQUIRE(b.size() == 11 + 16 + 24);
    CHECK(b.substr(0, 4) == "CFTR");
    CHECK(b[4] == 1);
    CHECK(b[5] == 1);
    CHECK(b[6] == 2);
    for (int i = 7; i < 11; ++i) CHECK(b[i] == 0);
    std::uint64_t d0 = 0;
    std::memcpy(&d0, b.data() + 11, 8);
    CHECK(d0 == 2);
    float first = 0;
    std::memcpy(&first, b.data() + 27, 4);
    CHECK(first == 1.0f);
}

TEST_CASE("tensor file round trips both dtypes") {
    oracle::TempDir tmp("tensor");
    const std::uint64_t shape[3] = {2, 2, 2};
    std::vector<double> v{0.1, -2, 3e10, 4, 5, 6, 7, -8.5};
    save_tensor(tmp.path / "d.cftr", shape, std::span<const double>(v));
    auto t = load_tensor(tmp.path / "d.cftr");
    CHECK(t.dtype == DType::f64);
    CHECK(t.shape == std::vector<std::uint64_t>{2, 2, 2});
    CHECK(t.values == v);
    std::vector<float> f(v.begin(), v.end());
    save_tensor(tmp.path / "f.cftr", shape, std::span<const float>(f));
    CHECK(load_tensor(tmp.path / "f.cftr").as_float() == f);
}

TEST_CASE("tensor file rejects bad input") {
    std::istringstream bad("XXXX1234");
    CHECK_THROWS_AS(read_tensor(bad), DecodeError);
    std::ostringstream out;
    const std::uint64_t shape[1] = {4};
    const float vals[4] = {1, 2, 3, 4};
    write_tensor(out, shape, std::span<const float>(vals));
    std::istringstream trunc(out.str().substr(0, out.str().size() - 3));
    CHECK_THROWS_AS(read_tensor(trunc), DecodeError);
    CHECK_THROWS_AS(load_tensor("/nonexistent/file.cftr"), IoError);
}

TEST_CASE("counter rng is deterministic and keyed") {
    CounterRng a(42), b(42), c(43);
    for (int i = 0; i < 10; ++i) {
        const auto x = a.next_u64();
        CHECK(x == b.next_u64());
        CHECK(x != c.next_u64());
    }
    CounterRng r(7);
    for (int i = 0; i < 1000; ++i) CHECK(r.below(13) < 13);
    CHECK(derive_seed(1, 2) != derive_seed(2, 1));
    CHECK(derive_seed(1, 2, 3) == derive_seed(derive_seed(1, 2), 3));
}

TEST_CASE("shuffle is a permutation") {
    std::vector<int> v(100);
    std::iota(v.begin(), v.end(), 0);
    CounterRng(5).shuffle(std::span<int>(v));
    std::set<int> s(v.begin(), v.end());
    CHECK(s.size() == 100);
    CHECK(!std::is_sorted(v.begin(), v.end()));
}

TEST_CASE("fft round trip") {
    const auto p = oracle::random_plane(6, 10, 3);
    const auto q = fft::inverse(fft::forward(p), 6, 10);
    for (std::size_t i = 0; i < p.size(); ++i) CHECK(q.data[i] == doctest::Approx(p.data[i]).epsilon(1e-12));
}

TEST_CASE("parallel_for covers every index and rethrows") {
    std::vector<int> hits(50, 0);
    parallel_for(50, 4, [&](std::size_t i) { hits[i]++; });
    CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
    CHECK_THROWS_AS(parallel_for(10, 3, [](std::size_t i) {
                        if (i == 5) throw DataError("boom");
                    }),
                    DataError);
}

}
