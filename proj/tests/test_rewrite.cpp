#include <catch2/catch_amalgamated.hpp>

#include <reveal/aiger.hpp>
#include <reveal/mulgen.hpp>
#include <reveal/rewrite.hpp>
#include <reveal/simulate.hpp>

using namespace reveal;

TEST_CASE( "redundant conjunctions fold away" )
{
  aig_builder b;
  literal const x = b.add_input();
  b.add_output( b.add_and( x, x ) ); // folded by the builder already
  b.add_output( b.add_and( x, !x ) );
  aig const g = optimize( b.build(), rewrite_config::dc2like() );
  CHECK( g.num_gates() == 0u );
  CHECK( g.output( 0 ) == literal( 1, false ) );
  CHECK( g.output( 1 ) == literal::constant( false ) );
}

TEST_CASE( "optimizing an 8-bit wallace brent-kung template preserves the function and shrinks it" )
{
  auto const generated =
      generate_multiplier( { ppg_kind::simple, ppa_kind::wallace, fsa_kind::brent_kung, 8 } );
  aig const optimized = optimize( generated.circuit, rewrite_config::dc2like( 5 ) );
  CHECK( optimized.num_gates() < generated.circuit.num_gates() );
  CHECK( exhaustive_product_check( optimized, 8 ) );
}

TEST_CASE( "resyn3-like schedule also preserves the function" )
{
  auto const generated = generate_multiplier(
      { ppg_kind::booth_radix4, ppa_kind::compressor_4to2, fsa_kind::sklansky, 6 } );
  aig const optimized = optimize( generated.circuit, rewrite_config::resyn3like( 9 ) );
  CHECK( exhaustive_product_check( optimized, 6 ) );
}

TEST_CASE( "optimization is deterministic for a fixed seed" )
{
  auto const generated =
      generate_multiplier( { ppg_kind::simple, ppa_kind::dadda, fsa_kind::kogge_stone, 6 } );
  aig const a = optimize( generated.circuit, rewrite_config::dc2like( 17 ) );
  aig const b = optimize( generated.circuit, rewrite_config::dc2like( 17 ) );
  CHECK( write_aiger( a ) == write_aiger( b ) );
}

TEST_CASE( "different seeds give structurally different results" )
{
  auto const generated =
      generate_multiplier( { ppg_kind::simple, ppa_kind::wallace, fsa_kind::sklansky, 8 } );
  aig const a = optimize( generated.circuit, rewrite_config::dc2like( 1 ) );
  aig const b = optimize( generated.circuit, rewrite_config::dc2like( 2 ) );
  CHECK( random_sim_equal( a, b, 4096, 3 ) );
  CHECK( write_aiger( a ) != write_aiger( b ) );
}

TEST_CASE( "bug injection produces a replaying witness" )
{
  auto const generated =
      generate_multiplier( { ppg_kind::simple, ppa_kind::array, fsa_kind::ripple_carry, 8 } );
  auto const bug = inject_bug( generated.circuit, 77 );

  std::vector<std::vector<uint64_t>> inputs( 16 );
  for ( uint32_t i = 0; i < 16; ++i )
  {
    inputs[i] = { bug.witness[i] ? ~0ull : 0ull };
  }
  auto const good = simulate( generated.circuit, inputs );
  auto const bad = simulate( bug.circuit, inputs );
  bool differs = false;
  for ( uint32_t o = 0; o < 16; ++o )
  {
    differs = differs || ( ( good[o][0] & 1ull ) != ( bad[o][0] & 1ull ) );
  }
  CHECK( differs );
}

TEST_CASE( "bug injection is deterministic" )
{
  auto const generated =
      generate_multiplier( { ppg_kind::simple, ppa_kind::dadda, fsa_kind::sklansky, 6 } );
  auto const a = inject_bug( generated.circuit, 123 );
  auto const b = inject_bug( generated.circuit, 123 );
  CHECK( write_aiger( a.circuit ) == write_aiger( b.circuit ) );
  CHECK( a.witness == b.witness );
}

TEST_CASE( "bug injection requires three internal nodes" )
{
  aig_builder b;
  literal const x = b.add_input();
  literal const y = b.add_input();
  b.add_output( b.add_and( x, y ) );
  CHECK_THROWS_AS( inject_bug( b.build(), 1 ), std::invalid_argument );
}
