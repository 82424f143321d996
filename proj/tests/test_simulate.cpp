#include <catch2/catch_amalgamated.hpp>

#include <reveal/aig.hpp>
#include <reveal/mulgen.hpp>
#include <reveal/simulate.hpp>

using namespace reveal;

namespace
{

aig single_and()
{
  aig_builder b;
  literal const x = b.add_input();
  literal const y = b.add_input();
  b.add_output( b.add_and( x, y ) );
  return b.build();
}

} // namespace

TEST_CASE( "bit-parallel simulation of a single and gate" )
{
  auto const out = simulate( single_and(), { { 0b1100ull }, { 0b1010ull } } );
  CHECK( out[0][0] == 0b1000ull );
}

TEST_CASE( "simulation rejects word-count mismatches" )
{
  CHECK_THROWS_AS( simulate( single_and(), { { 1ull } } ), std::invalid_argument );
}

TEST_CASE( "a 4-bit array multiplier computes 3 * 5 = 15" )
{
  auto const generated =
      generate_multiplier( { ppg_kind::simple, ppa_kind::array, fsa_kind::ripple_carry, 4 } );
  std::vector<std::vector<uint64_t>> inputs( 8, std::vector<uint64_t>{ 0ull } );
  for ( int i = 0; i < 4; ++i )
  {
    inputs[i][0] = ( ( 3u >> i ) & 1u ) ? ~0ull : 0ull;
    inputs[4 + i][0] = ( ( 5u >> i ) & 1u ) ? ~0ull : 0ull;
  }
  auto const out = simulate( generated.circuit, inputs );
  uint32_t product = 0;
  for ( int o = 0; o < 8; ++o )
  {
    product |= ( out[o][0] & 1ull ) << o;
  }
  CHECK( product == 15u );
}

TEST_CASE( "support of inputs and gates" )
{
  aig_builder b;
  literal const x = b.add_input();
  literal const y = b.add_input();
  literal const z = b.add_input();
  literal const g = b.add_and( x, y );
  literal const h = b.add_and( g, z );
  b.add_output( h );
  aig const a = b.build();
  CHECK( support( a, x.node() ) == std::vector<uint32_t>{ 1 } );
  CHECK( support_size( a, x.node() ) == 1u );
  CHECK( support( a, g.node() ) == std::vector<uint32_t>{ 1, 2 } );
  CHECK( support_size( a, h.node() ) == 3u );
  CHECK_THROWS_AS( support( a, 99 ), std::out_of_range );
}

TEST_CASE( "lsb of a simple multiplier depends on exactly a0 and b0" )
{
  auto const generated =
      generate_multiplier( { ppg_kind::simple, ppa_kind::wallace, fsa_kind::ripple_carry, 4 } );
  aig const& g = generated.circuit;
  CHECK( support( g, g.output( 0 ).node() ) == std::vector<uint32_t>{ 1, 5 } );
}

TEST_CASE( "logic levels" )
{
  aig_builder b;
  std::vector<literal> ins;
  for ( int i = 0; i < 8; ++i )
  {
    ins.push_back( b.add_input() );
  }
  // balanced and-tree over eight inputs
  while ( ins.size() > 1 )
  {
    std::vector<literal> next;
    for ( size_t i = 0; i + 1 < ins.size(); i += 2 )
    {
      next.push_back( b.add_and( ins[i], ins[i + 1] ) );
    }
    ins = next;
  }
  b.add_output( ins[0] );
  aig const g = b.build();
  CHECK( logic_level( g, 1 ) == 0u );
  CHECK( logic_level( g, g.output( 0 ).node() ) == 3u );
  CHECK_THROWS_AS( logic_level( g, 1000 ), std::out_of_range );
}

TEST_CASE( "logic level is invariant under strash" )
{
  auto const generated =
      generate_multiplier( { ppg_kind::simple, ppa_kind::dadda, fsa_kind::kogge_stone, 6 } );
  aig const& g = generated.circuit;
  aig const h = strash( g );
  auto const lg = logic_levels( g );
  auto const lh = logic_levels( h );
  uint32_t max_g = 0, max_h = 0;
  for ( uint32_t o = 0; o < g.num_outputs(); ++o )
  {
    max_g = std::max( max_g, lg[g.output( o ).node()] );
    max_h = std::max( max_h, lh[h.output( o ).node()] );
  }
  CHECK( max_g == max_h );
}
