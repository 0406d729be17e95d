// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include "fabroute/netlist.hpp"

using namespace fabroute;

namespace {

const char *kTwoCells = R"(# two NAND3s
master NAND3 pins A B C OUT
cell c1 NAND3
cell c2 NAND3 seq
net n1 c1.OUT c2.A
)";

template <class E> E parse_error(const std::string &text)
{
    try {
        parse_netlist(text);
    } catch (const E &e) {
        return e;
    }
    ADD_FAILURE() << "no error for:\n" << text;
    return E("", 0, 0);
}

} // namespace

TEST(Parse, MinimalNetlist)
{
    const auto nl = parse_netlist(kTwoCells);
    ASSERT_EQ(nl.cells.size(), 2u);
    ASSERT_EQ(nl.nets.size(), 1u);
    EXPECT_EQ(nl.nets[0].terminals.size(), 2u);
    EXPECT_EQ(nl.nets[0].driver, 0u);
    EXPECT_FALSE(nl.cells[0].is_sequential);
    EXPECT_TRUE(nl.cells[1].is_sequential);
    EXPECT_TRUE(validate(nl).empty());
}

TEST(Parse, OrderIndependent)
{
    const auto nl = parse_netlist("net n1 c1.OUT c2.A\ncell c2 NAND3\ncell c1 NAND3\nmaster NAND3 pins A B C OUT\n");
    EXPECT_EQ(nl.nets[0].terminals.size(), 2u);
}

TEST(Parse, UnresolvedCellIsNamed)
{
    const auto e = parse_error<ReferenceError>(std::string(kTwoCells) + "net n2 c3.A c1.A\n");
    EXPECT_NE(std::string(e.what()).find("c3"), std::string::npos);
    EXPECT_EQ(e.line(), 6u);
    EXPECT_EQ(e.column(), 8u);
}

TEST(Parse, UnresolvedPinAndMaster)
{
    EXPECT_NE(std::string(parse_error<ReferenceError>(std::string(kTwoCells) + "net n2 c1.Z c2.B\n").what())
                  .find("'Z'"),
              std::string::npos);
    EXPECT_NE(std::string(parse_error<ReferenceError>("cell x NOR9\n").what()).find("NOR9"), std::string::npos);
}

TEST(Parse, Duplicates)
{
    parse_error<DuplicateError>(std::string(kTwoCells) + "cell c1 NAND3\n");
    parse_error<DuplicateError>(std::string(kTwoCells) + "net n1 c1.A c2.B\n");
    parse_error<DuplicateError>(std::string(kTwoCells) + "net n2 c1.A c1.A\n");
    parse_error<DuplicateError>("master M pins A A\n");
}

TEST(Parse, SyntaxErrorsCarryPosition)
{
    const auto e = parse_error<ParseError>("master M pins A Y\nwire w1\n");
    EXPECT_EQ(e.line(), 2u);
    EXPECT_EQ(e.column(), 1u);
    EXPECT_EQ(parse_error<ParseError>("master M pins A Y\ncell c M\nnet n c\n").line(), 3u);
    parse_error<ParseError>("master M A Y\n");
    parse_error<ParseError>("master M pins A Y\ncell c M flop\n");
    parse_error<ParseError>("net n\n");
}

TEST(Parse, DanglingNetParsesAndWarns)
{
    const auto nl = parse_netlist(std::string(kTwoCells) + "net lone c1.B\n");
    const auto rep = validate(nl);
    EXPECT_EQ(rep.error_count(), 0u);
    EXPECT_TRUE(rep.contains("dangling net"));
}

TEST(Validate, DuplicateNetId)
{
    auto nl = parse_netlist(kTwoCells);
    nl.nets.push_back(nl.nets[0]);
    const auto rep = validate(nl);
    EXPECT_TRUE(rep.contains("duplicate net id"));
    EXPECT_GT(rep.error_count(), 0u);
}

TEST(Validate, BrokenReferences)
{
    auto nl = parse_netlist(kTwoCells);
    nl.nets[0].terminals.push_back({7, 0});
    nl.nets[0].driver = 9;
    const auto rep = validate(nl);
    EXPECT_TRUE(rep.contains("missing cell"));
    EXPECT_TRUE(rep.contains("driver index"));
}

TEST(Serialize, RoundTrip)
{
    const auto nl = parse_netlist(std::string("design d1\n") + kTwoCells + "net n2 c2.OUT c1.A c1.B\n");
    const auto again = parse_netlist(serialize(nl));
    EXPECT_EQ(nl, again);
    EXPECT_EQ(again.name, "d1");
}
