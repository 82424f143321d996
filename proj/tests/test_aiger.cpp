#include <catch2/catch_amalgamated.hpp>

#include <reveal/aiger.hpp>
#include <reveal/mulgen.hpp>
#include <reveal/simulate.hpp>

using namespace reveal;

TEST_CASE( "parse the smallest and-gate netlist" )
{
  aig const g = parse_aiger( "aag 3 2 0 1 1\n2\n4\n6\n6 2 4\n" );
  CHECK( g.num_inputs() == 2u );
  CHECK( g.num_gates() == 1u );
  CHECK( g.num_outputs() == 1u );
  CHECK( g.output( 0 ) == literal( 3, false ) );
  CHECK( g.gate( 3 ).fanin0 == literal( 1, false ) );
  CHECK( g.gate( 3 ).fanin1 == literal( 2, false ) );
}

TEST_CASE( "parse identity with inversion" )
{
  aig const g = parse_aiger( "aag 1 1 0 1 0\n2\n3\n" );
  CHECK( g.num_inputs() == 1u );
  CHECK( g.num_gates() == 0u );
  CHECK( g.output( 0 ) == literal( 1, true ) );
}

TEST_CASE( "write produces canonical ascii text" )
{
  aig_builder b;
  literal const x = b.add_input();
  literal const y = b.add_input();
  b.add_output( b.add_and( x, y ) );
  CHECK( write_aiger( b.build() ) == "aag 3 2 0 1 1\n2\n4\n6\n6 2 4\n" );

  aig_builder b2;
  literal const z = b2.add_input();
  b2.add_output( z );
  CHECK( write_aiger( b2.build() ) == "aag 1 1 0 1 0\n2\n2\n" );
}

TEST_CASE( "parser rejects sequential and malformed files" )
{
  CHECK_THROWS_WITH( parse_aiger( "aag 3 1 1 1 1\n2\n4 2\n4\n6 2 4\n" ),
                     Catch::Matchers::ContainsSubstring( "sequential" ) );
  CHECK_THROWS_AS( parse_aiger( "hello" ), aiger_error );
  CHECK_THROWS_AS( parse_aiger( "aag 2 1 0 1 1\n2\n4\n4 6 2\n" ), aiger_error ); // dangling
}

TEST_CASE( "binary form of a 4-bit array multiplier simulates like ascii" )
{
  auto const generated = generate_multiplier( { ppg_kind::simple, ppa_kind::array,
                                                fsa_kind::ripple_carry, 4 } );
  std::string const ascii = write_aiger( generated.circuit, aiger_format::ascii );
  std::string const binary = write_aiger( generated.circuit, aiger_format::binary );
  aig const from_ascii = parse_aiger( ascii );
  aig const from_binary = parse_aiger( binary );
  CHECK( exhaustive_product_check( from_ascii, 4 ) );
  CHECK( exhaustive_product_check( from_binary, 4 ) );
}

TEST_CASE( "binary write round-trips bit-exactly on a Wallace/Brent-Kung template" )
{
  auto const generated = generate_multiplier( { ppg_kind::simple, ppa_kind::wallace,
                                                fsa_kind::brent_kung, 8 } );
  std::string const bytes = write_aiger( generated.circuit, aiger_format::binary );
  aig const reparsed = parse_aiger( bytes );
  CHECK( write_aiger( reparsed, aiger_format::binary ) == bytes );
}

TEST_CASE( "symbol table lines survive a round trip" )
{
  aig_builder b;
  literal const x = b.add_input();
  b.set_input_name( 0, "x0" );
  b.add_output( !x );
  b.set_output_name( 0, "y" );
  std::string const text = write_aiger( b.build() );
  CHECK( text.find( "i0 x0\n" ) != std::string::npos );
  aig const g = parse_aiger( text );
  REQUIRE( g.has_names() );
  CHECK( g.input_names()[0] == "x0" );
  CHECK( g.output_names()[0] == "y" );
}
