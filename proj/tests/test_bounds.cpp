#include "relucert/bounds.hpp"

#include "testutil.hpp"

#include <doctest.h>

#include <sstream>

using namespace relucert;

TEST_SUITE("bounds") {

TEST_CASE("box on the running example reproduces the known intervals") {
    Network net = testutil::fig1_net();
    BoundsMap bm = box_propagate(net, testutil::fig1_region());
    CHECK(bm.at({1, 0}).lb == -2.0);
    CHECK(bm.at({1, 0}).ub == 2.0);
    CHECK(bm.at({1, 1}).lb == -2.0);
    CHECK(bm.at({1, 1}).ub == 2.0);
    CHECK(bm.at({2, 0}).lb == 0.0);
    CHECK(bm.at({2, 0}).ub == 6.0);
    CHECK(bm.at({2, 1}).lb == 0.0);
    CHECK(bm.at({2, 1}).ub == 2.0);
}

TEST_CASE("zero weights leave exactly the biases") {
    Network net({{Mat(2, 2, 0.0), {0.4, -0.7}}, {Mat(1, 2, 0.0), {2.5}}});
    BoundsMap bm = box_propagate(net, {{0.0, 0.0}, 1.0, {}, {}});
    CHECK(bm.at({1, 0}).lb == 0.4);
    CHECK(bm.at({1, 0}).ub == 0.4);
    CHECK(bm.at({1, 1}).lb == -0.7);
    CHECK(bm.at({2, 0}).lb == 2.5);
    CHECK(bm.at({2, 0}).ub == 2.5);
}

TEST_CASE("random 2-3-2 net: box contains a dense input grid") {
    testutil::NetGen gen(7);
    Network net = gen.random_net({2, 3, 2});
    InputRegion region = gen.random_region(2, 0.8);
    BoundsMap bm = box_propagate(net, region);
    Vec lo = region.effective_lo(), hi = region.effective_hi();
    const int steps = 200;
    Vec x(2);
    for (int i = 0; i <= steps; ++i) {
        x[0] = lo[0] + (hi[0] - lo[0]) * i / steps;
        for (int j = 0; j <= steps; ++j) {
            x[1] = lo[1] + (hi[1] - lo[1]) * j / steps;
            Activations acts = forward(net, x);
            for (int k = 1; k <= net.num_layers(); ++k)
                for (int r = 0; r < net.layer_dim(k); ++r) {
                    double z = acts.pre[static_cast<std::size_t>(k - 1)][static_cast<std::size_t>(r)];
                    const Interval& iv = bm.at({k, r});
                    REQUIRE(z >= iv.lb - 1e-6);
                    REQUIRE(z <= iv.ub + 1e-6);
                }
        }
    }
}

TEST_CASE("sampling soundness over a thousand random points") {
    testutil::NetGen gen(11);
    Network net = gen.random_net({3, 6, 5, 3});
    InputRegion region = gen.random_region(3, 0.5);
    BoundsMap bm = box_propagate(net, region);
    for (int s = 0; s < 1000; ++s) {
        Vec x = gen.random_point(region);
        Activations acts = forward(net, x);
        for (int k = 1; k <= net.num_layers(); ++k)
            for (int r = 0; r < net.layer_dim(k); ++r) {
                double z = acts.pre[static_cast<std::size_t>(k - 1)][static_cast<std::size_t>(r)];
                const Interval& iv = bm.at({k, r});
                REQUIRE(z >= iv.lb - 1e-6);
                REQUIRE(z <= iv.ub + 1e-6);
            }
    }
}

TEST_CASE("shrinking epsilon never widens any bound") {
    testutil::NetGen gen(13);
    Network net = gen.random_net({2, 4, 3});
    Vec center = {0.1, -0.2};
    BoundsMap wide = box_propagate(net, {center, 0.6, {}, {}});
    BoundsMap narrow = box_propagate(net, {center, 0.2, {}, {}});
    for (int k = 1; k <= net.num_layers(); ++k)
        for (int r = 0; r < net.layer_dim(k); ++r) {
            CHECK(narrow.at({k, r}).lb >= wide.at({k, r}).lb - 1e-12);
            CHECK(narrow.at({k, r}).ub <= wide.at({k, r}).ub + 1e-12);
        }
}

TEST_CASE("average uncertainty is the plain mean of widths") {
    BoundsMap bm;
    bm.push_layer({{0.0, 1.0}, {-1.0, 1.0}});
    CHECK(average_uncertainty(bm, 1) == doctest::Approx(1.5));
    BoundsMap points;
    points.push_layer({{2.0, 2.0}, {-3.0, -3.0}});
    CHECK(average_uncertainty(points, 1) == 0.0);
}

TEST_CASE("the example's second layer averages to 4") {
    Network net = testutil::fig1_net();
    BoundsMap bm = box_propagate(net, testutil::fig1_region());
    CHECK(average_uncertainty(bm, 2) == doctest::Approx(4.0));
}

TEST_CASE("status classification and missing layer errors") {
    BoundsMap bm;
    bm.push_layer({{0.0, 2.0}, {-2.0, -0.5}, {-1.0, 1.0}});
    CHECK(bm.status({1, 0}) == NeuronStatus::StablePositive);
    CHECK(bm.status({1, 1}) == NeuronStatus::StableNegative);
    CHECK(bm.status({1, 2}) == NeuronStatus::Unstable);
    CHECK(bm.post({1, 1}).ub == 0.0);
    CHECK(bm.post({1, 2}).lb == 0.0);
    CHECK_THROWS_AS(average_uncertainty(bm, 2), Error);
}

TEST_CASE("CSV dump carries layer, index, bounds and status") {
    Network net = testutil::fig1_net();
    BoundsMap bm = box_propagate(net, testutil::fig1_region());
    std::string csv = bounds_to_csv(bm);
    CHECK(csv.find("layer,index,lb,ub,status\n") == 0);
    CHECK(csv.find("1,0,-2,2,unstable") != std::string::npos);
    CHECK(csv.find("2,0,0,6,stable_pos") != std::string::npos);
}

} // TEST_SUITE
