#include <catch2/catch_amalgamated.hpp>

#include <reveal/aig.hpp>
#include <reveal/simulate.hpp>

using namespace reveal;

TEST_CASE( "literal encoding follows the aiger convention" )
{
  CHECK( literal( 0, false ).code() == 0u );
  CHECK( literal( 0, true ).code() == 1u );
  CHECK( literal( 3, false ).code() == 6u );
  CHECK( literal( 3, true ).code() == 7u );
  CHECK( ( !literal( 3, false ) ).code() == 7u );
  CHECK( literal::constant( true ).is_constant() );
}

TEST_CASE( "builder folds trivial and-gate cases" )
{
  aig_builder b;
  literal const x = b.add_input();
  literal const y = b.add_input();
  CHECK( b.add_and( x, x ) == x );
  CHECK( b.add_and( x, !x ) == b.constant( false ) );
  CHECK( b.add_and( x, b.constant( true ) ) == x );
  CHECK( b.add_and( x, b.constant( false ) ) == b.constant( false ) );
  literal const g1 = b.add_and( x, y );
  literal const g2 = b.add_and( y, x );
  CHECK( g1 == g2 );
  CHECK( b.num_gates() == 1u );
}

TEST_CASE( "builder rollback removes speculative gates" )
{
  aig_builder b;
  literal const x = b.add_input();
  literal const y = b.add_input();
  b.add_and( x, y );
  auto const mark = b.checkpoint();
  b.add_and( x, !y );
  b.add_and( !x, y );
  CHECK( b.num_gates() == 3u );
  b.rollback( mark );
  CHECK( b.num_gates() == 1u );
  // the hash entries are gone as well, so re-adding creates fresh gates
  literal const g = b.add_and( x, !y );
  CHECK( g.node() == b.num_inputs() + 2u );
}

TEST_CASE( "strash merges duplicate gates and keeps the function" )
{
  // build an aig with two identical gates by hand
  std::vector<and_gate> gates;
  gates.push_back( { literal( 1, false ), literal( 2, false ) } );
  gates.push_back( { literal( 1, false ), literal( 2, false ) } );
  aig const g( 2, gates, { literal( 3, false ), literal( 4, false ) } );
  aig const h = strash( g );
  CHECK( h.num_gates() == 1u );
  CHECK( h.output( 0 ) == h.output( 1 ) );

  // idempotence
  aig const h2 = strash( h );
  CHECK( h2.num_gates() == h.num_gates() );
}

TEST_CASE( "cleanup drops unreachable gates" )
{
  aig_builder b;
  literal const x = b.add_input();
  literal const y = b.add_input();
  literal const used = b.add_and( x, y );
  b.add_and( x, !y ); // dead
  b.add_output( used );
  aig const g = b.build();
  CHECK( g.num_gates() == 2u );
  aig const h = cleanup( g );
  CHECK( h.num_gates() == 1u );
  CHECK( random_sim_equal( g, h, 256, 7 ) );
}

TEST_CASE( "aig validation rejects forward references" )
{
  std::vector<and_gate> gates;
  gates.push_back( { literal( 4, false ), literal( 1, false ) } ); // node 4 not defined yet
  CHECK_THROWS_AS( aig( 2, gates, {} ), std::invalid_argument );
}
