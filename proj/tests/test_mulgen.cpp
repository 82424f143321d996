#include <catch2/catch_amalgamated.hpp>

#include <reveal/mulgen.hpp>
#include <reveal/simulate.hpp>

using namespace reveal;

namespace
{

/*! \brief Exhaustively check a width+1-output adder against integer addition. */
bool adder_matches( aig const& g, uint32_t width )
{
  if ( g.num_inputs() != 2 * width || g.num_outputs() != width + 1 )
  {
    return false;
  }
  uint64_t const total = 1ull << ( 2 * width );
  simulator sim( g );
  std::vector<uint64_t> words( 2 * width );
  for ( uint64_t base = 0; base < total; base += 64 )
  {
    uint64_t const lanes = std::min<uint64_t>( 64, total - base );
    for ( uint32_t i = 0; i < 2 * width; ++i )
    {
      uint64_t w = 0;
      for ( uint64_t lane = 0; lane < lanes; ++lane )
      {
        w |= ( ( ( base + lane ) >> i ) & 1ull ) << lane;
      }
      words[i] = w;
    }
    sim.eval( words );
    for ( uint64_t lane = 0; lane < lanes; ++lane )
    {
      uint64_t const assignment = base + lane;
      uint64_t const x = assignment & ( ( 1ull << width ) - 1 );
      uint64_t const y = assignment >> width;
      uint64_t const sum = x + y;
      for ( uint32_t o = 0; o <= width; ++o )
      {
        if ( ( ( sim.output_word( o ) >> lane ) & 1ull ) != ( ( sum >> o ) & 1ull ) )
        {
          return false;
        }
      }
    }
  }
  return true;
}

} // namespace

TEST_CASE( "all nine adders compute a + b exhaustively at width 4 and 5" )
{
  for ( auto fsa : { fsa_kind::ripple_carry, fsa_kind::carry_lookahead, fsa_kind::carry_skip,
                     fsa_kind::serial_prefix, fsa_kind::brent_kung, fsa_kind::sklansky,
                     fsa_kind::han_carlson, fsa_kind::ladner_fischer, fsa_kind::kogge_stone } )
  {
    INFO( "adder " << fsa_code( fsa ) );
    CHECK( adder_matches( generate_adder( fsa, 4 ), 4 ) );
    CHECK( adder_matches( generate_adder( fsa, 5 ), 5 ) );
  }
}

TEST_CASE( "kogge-stone is strictly shallower than ripple carry at width 8" )
{
  aig const ks = generate_adder( fsa_kind::kogge_stone, 8 );
  aig const rc = generate_adder( fsa_kind::ripple_carry, 8 );
  CHECK( logic_level( ks, ks.output( 7 ).node() ) < logic_level( rc, rc.output( 7 ).node() ) );
}

TEST_CASE( "brent-kung at width 1 is a half adder" )
{
  aig const g = generate_adder( fsa_kind::brent_kung, 1 );
  CHECK( adder_matches( g, 1 ) );
}

TEST_CASE( "smallest array multiplier matches integer multiplication" )
{
  auto const generated =
      generate_multiplier( { ppg_kind::simple, ppa_kind::array, fsa_kind::ripple_carry, 2 } );
  CHECK( exhaustive_product_check( generated.circuit, 2 ) );
}

TEST_CASE( "simple wallace brent-kung at width 8 is exhaustively correct" )
{
  auto const generated =
      generate_multiplier( { ppg_kind::simple, ppa_kind::wallace, fsa_kind::brent_kung, 8 } );
  CHECK( exhaustive_product_check( generated.circuit, 8 ) );
}

TEST_CASE( "booth dadda kogge-stone at width 8 passes 1e5 random vectors" )
{
  auto const generated = generate_multiplier(
      { ppg_kind::booth_radix4, ppa_kind::dadda, fsa_kind::kogge_stone, 8 } );
  CHECK( random_product_check( generated.circuit, 8, 100000, 42 ) );
}

TEST_CASE( "booth multipliers are exhaustively correct at small widths" )
{
  for ( uint32_t width : { 4u, 5u, 6u } )
  {
    for ( auto ppa : { ppa_kind::array, ppa_kind::wallace, ppa_kind::dadda,
                       ppa_kind::compressor_4to2, ppa_kind::counter_wallace } )
    {
      INFO( "booth width " << width << " ppa " << ppa_code( ppa ) );
      auto const generated =
          generate_multiplier( { ppg_kind::booth_radix4, ppa, fsa_kind::ripple_carry, width } );
      CHECK( exhaustive_product_check( generated.circuit, width ) );
    }
  }
}

TEST_CASE( "unsupported label combinations are rejected" )
{
  CHECK_THROWS_AS(
      generate_multiplier( { ppg_kind::booth_radix4, ppa_kind::array, fsa_kind::ripple_carry, 3 } ),
      std::invalid_argument );
  CHECK_THROWS_AS(
      generate_multiplier( { ppg_kind::simple, ppa_kind::array, fsa_kind::ripple_carry, 1 } ),
      std::invalid_argument );
  CHECK_THROWS_AS( generate_adder( fsa_kind::sklansky, 0 ), std::invalid_argument );
}

TEST_CASE( "tree and non-tree partition of the adder kinds" )
{
  CHECK( non_tree_adders().size() == 4u );
  CHECK( tree_adders().size() == 5u );
  for ( auto k : non_tree_adders() )
  {
    CHECK( !is_tree_adder( k ) );
  }
  for ( auto k : tree_adders() )
  {
    CHECK( is_tree_adder( k ) );
  }
}

TEST_CASE( "label codes round-trip" )
{
  architecture_label const label{ ppg_kind::booth_radix4, ppa_kind::compressor_4to2,
                                  fsa_kind::han_carlson, 16 };
  CHECK( label.code() == "BP_4to2_HC_16" );
  CHECK( parse_label( label.code() ) == label );
  CHECK_THROWS_AS( parse_label( "XX_YY_ZZ_4" ), std::invalid_argument );
}

TEST_CASE( "the accumulator leaves exactly two addend rows" )
{
  // the boundary circuit exposes both rows; their integer sum must equal
  // the product regardless of which final adder would follow
  for ( auto ppa : { ppa_kind::array, ppa_kind::wallace, ppa_kind::dadda,
                     ppa_kind::compressor_4to2, ppa_kind::counter_wallace } )
  {
    INFO( "ppa " << ppa_code( ppa ) );
    architecture_label const label{ ppg_kind::simple, ppa, fsa_kind::ripple_carry, 4 };
    aig const boundary = generate_ppa_boundary( label );
    REQUIRE( boundary.num_outputs() == 16u ); // two 8-bit rows
    simulator sim( boundary );
    std::vector<uint64_t> words( 8 );
    for ( uint32_t a = 0; a < 16; ++a )
    {
      for ( uint32_t bb = 0; bb < 16; ++bb )
      {
        for ( uint32_t i = 0; i < 4; ++i )
        {
          words[i] = ( ( a >> i ) & 1u ) ? ~0ull : 0ull;
          words[4 + i] = ( ( bb >> i ) & 1u ) ? ~0ull : 0ull;
        }
        sim.eval( words );
        uint32_t x = 0, y = 0;
        for ( uint32_t o = 0; o < 8; ++o )
        {
          x |= static_cast<uint32_t>( sim.output_word( o ) & 1ull ) << o;
          y |= static_cast<uint32_t>( sim.output_word( 8 + o ) & 1ull ) << o;
        }
        CHECK( ( ( x + y ) & 0xffu ) == a * bb );
      }
    }
  }
}

TEST_CASE( "replacing the final adder does not change the accumulator rows" )
{
  architecture_label const base{ ppg_kind::simple, ppa_kind::dadda, fsa_kind::ripple_carry, 6 };
  architecture_label other = base;
  other.fsa = fsa_kind::kogge_stone;
  // boundary construction is FSA-independent, so the emitted rows agree
  aig const rows_a = generate_ppa_boundary( base );
  aig const rows_b = generate_ppa_boundary( other );
  CHECK( random_sim_equal( rows_a, rows_b, 1024, 3 ) );
}

TEST_CASE( "the full simple grid at width 4 is exhaustively correct" )
{
  for ( auto const& label : all_labels( 4 ) )
  {
    if ( label.ppg != ppg_kind::simple )
    {
      continue;
    }
    INFO( "label " << label.code() );
    auto const generated = generate_multiplier( label );
    CHECK( exhaustive_product_check( generated.circuit, 4 ) );
  }
}
