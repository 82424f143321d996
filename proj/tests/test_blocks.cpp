#include <catch2/catch_amalgamated.hpp>

#include <reveal/blocks.hpp>
#include <reveal/mulgen.hpp>
#include <reveal/rewrite.hpp>

using namespace reveal;

namespace
{

/*! \brief Textbook full adder: parity sum, two-level majority carry. */
aig full_adder_circuit()
{
  aig_builder b;
  literal const x = b.add_input();
  literal const y = b.add_input();
  literal const z = b.add_input();
  literal const sum = b.add_xor( b.add_xor( x, y ), z );
  literal const carry =
      b.add_or( b.add_or( b.add_and( x, y ), b.add_and( x, z ) ), b.add_and( y, z ) );
  b.add_output( sum );
  b.add_output( carry );
  return b.build();
}

} // namespace

TEST_CASE( "a hand-built full adder recovers as one fa pair" )
{
  aig const g = full_adder_circuit();
  block_annotation const ann = annotate_blocks( g );
  REQUIRE( ann.pairs.size() == 1u );
  CHECK( ann.pairs[0].kind == block_kind::fa );
  CHECK( ann.pairs[0].shared_inputs == std::vector<uint32_t>{ 1, 2, 3 } );
  CHECK( ann.pairs[0].sum_root == g.output( 0 ).node() );
  CHECK( ann.pairs[0].carry_root == g.output( 1 ).node() );
  CHECK( ann.xor_root[g.output( 0 ).node()] );
  CHECK( ann.maj_root[g.output( 1 ).node()] );
  // every internal gate belongs to the pair
  for ( uint32_t i = 0; i < g.num_gates(); ++i )
  {
    CHECK( ann.function_tag[g.gate_node( i )] == node_function::fa_member );
  }
}

TEST_CASE( "a lone half adder recovers as one ha pair" )
{
  aig_builder b;
  literal const x = b.add_input();
  literal const y = b.add_input();
  b.add_output( b.add_xor( x, y ) );
  b.add_output( b.add_and( x, y ) );
  aig const g = b.build();
  block_annotation const ann = annotate_blocks( g );
  REQUIRE( ann.pairs.size() == 1u );
  CHECK( ann.pairs[0].kind == block_kind::ha );
  CHECK( ann.pairs[0].shared_inputs == std::vector<uint32_t>{ 1, 2 } );
}

TEST_CASE( "recovered counts match the generator log on unoptimized templates" )
{
  for ( auto ppa : { ppa_kind::array, ppa_kind::wallace, ppa_kind::dadda } )
  {
    for ( uint32_t width : { 8u, 12u } )
    {
      INFO( "ppa " << ppa_code( ppa ) << " width " << width );
      auto const generated =
          generate_multiplier( { ppg_kind::simple, ppa, fsa_kind::ripple_carry, width } );
      block_annotation const ann = annotate_blocks( generated.circuit );
      CHECK( ann.count( block_kind::fa ) == generated.log.fa );
      CHECK( ann.count( block_kind::ha ) == generated.log.ha );
    }
  }
}

TEST_CASE( "optimization never increases the recovered full-adder count" )
{
  auto const generated =
      generate_multiplier( { ppg_kind::simple, ppa_kind::array, fsa_kind::ripple_carry, 8 } );
  auto const before = annotate_blocks( generated.circuit ).count( block_kind::fa );
  aig const optimized = optimize( generated.circuit, rewrite_config::dc2like( 3 ) );
  auto const after = annotate_blocks( optimized ).count( block_kind::fa );
  CHECK( after <= before );
  CHECK( before == generated.log.fa );
}

TEST_CASE( "pair validation holds for every recovered pair" )
{
  auto const generated =
      generate_multiplier( { ppg_kind::booth_radix4, ppa_kind::wallace, fsa_kind::sklansky, 8 } );
  block_annotation const ann = annotate_blocks( generated.circuit );
  CHECK( !ann.pairs.empty() );
  for ( auto const& pair : ann.pairs )
  {
    uint32_t const n = static_cast<uint32_t>( pair.shared_inputs.size() );
    REQUIRE( ( ( pair.kind == block_kind::fa && n == 3 ) ||
               ( pair.kind == block_kind::ha && n == 2 ) ) );
    cut const sum_cut{ pair.sum_root, pair.shared_inputs };
    cut const carry_cut{ pair.carry_root, pair.shared_inputs };
    // replay both truth tables and verify the canonical sum/carry behavior
    truth_table const sum_tt = cut_function( generated.circuit, sum_cut );
    truth_table const carry_tt = cut_function( generated.circuit, carry_cut );
    for ( uint32_t x = 0; x < ( 1u << n ); ++x )
    {
      uint32_t const y = x ^ pair.input_mask;
      bool const parity = ( __builtin_popcount( y ) & 1 ) != 0;
      bool const major = n == 2 ? ( y == 3u ) : ( __builtin_popcount( y ) >= 2 );
      CHECK( ( ( ( sum_tt.bits >> x ) & 1ull ) != 0 ) == ( parity != pair.sum_negated ) );
      CHECK( ( ( ( carry_tt.bits >> x ) & 1ull ) != 0 ) == ( major != pair.carry_negated ) );
    }
  }
}

TEST_CASE( "function tags form a partition" )
{
  auto const generated = generate_multiplier(
      { ppg_kind::simple, ppa_kind::counter_wallace, fsa_kind::han_carlson, 8 } );
  block_annotation const ann = annotate_blocks( generated.circuit );
  CHECK( ann.num_nodes() == generated.circuit.num_nodes() );
  // the tag enum is one value per node by construction; spot-check mixtures exist
  uint32_t fa = 0, ha = 0, rem = 0, plain = 0;
  for ( uint32_t i = 0; i < generated.circuit.num_gates(); ++i )
  {
    switch ( ann.function_tag[generated.circuit.gate_node( i )] )
    {
    case node_function::fa_member: ++fa; break;
    case node_function::ha_member: ++ha; break;
    case node_function::remaining_xor: ++rem; break;
    case node_function::and_gate: ++plain; break;
    }
  }
  CHECK( fa > 0 );
  CHECK( ha > 0 );
  CHECK( plain > 0 );
  CHECK( fa + ha + rem + plain == generated.circuit.num_gates() );
}
