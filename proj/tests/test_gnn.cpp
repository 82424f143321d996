#include <catch2/catch_amalgamated.hpp>

#include <reveal/cones.hpp>
#include <reveal/gnn.hpp>
#include <reveal/mulgen.hpp>
#include <reveal/rewrite.hpp>

#include <sstream>

using namespace reveal;

namespace
{

gnn_sample sample_from( architecture_label const& label, bool msb = true )
{
  auto const generated = generate_multiplier( label );
  cone const c = msb ? extract_msb_cone( generated.circuit, std::min( 8u, 2 * label.width ),
                                         k_cut_depth( label.width ) )
                     : extract_lsb_cone( generated.circuit, default_lsb_count( label.width ) );
  block_annotation const ann = annotate_blocks( c.sub );
  gnn_sample s = make_sample( c, ann, generated.circuit );
  s.topo_label = is_tree_adder( label.fsa ) ? 1 : 0;
  int const idx = fsa_class_index( label.fsa );
  s.subtype_label = s.topo_label == 0 ? idx : idx - 4;
  return s;
}

/*! \brief Ten-node toy graph with mixed features for gradient checks. */
gnn_sample toy_graph()
{
  gnn_sample s;
  s.num_nodes = 10;
  s.features.assign( 10 * node_feature_dim, 0.0 );
  rng gen( 5 );
  for ( uint32_t n = 0; n < 10; ++n )
  {
    double* row = s.features.data() + n * node_feature_dim;
    row[0] = gen.next_bool() ? 1.0 : 0.0;
    row[1] = gen.next_bool() ? 1.0 : 0.0;
    row[2 + gen.next_below( 3 )] = 1.0;
    row[5 + gen.next_below( 4 )] = 1.0;
    row[9] = gen.next_bool() ? 1.0 : 0.0;
    row[10] = gen.next_bool() ? 1.0 : 0.0;
  }
  s.edges = { { 0, 2 }, { 1, 2 }, { 2, 4 }, { 3, 4 }, { 4, 6 }, { 5, 6 },
              { 6, 8 }, { 7, 8 }, { 8, 9 }, { 0, 9 }, { 3, 7 } };
  s.graph.f_level = 5;
  s.graph.f_fan = 4;
  s.graph.density = 0.3;
  s.graph.clustering = 0.1;
  s.graph.avg_degree = 2.2;
  s.topo_label = 1;
  s.subtype_label = 2;
  return s;
}

} // namespace

TEST_CASE( "identical features and symmetric neighborhoods give equal embeddings" )
{
  // directed cycle: every node has one in- and one out-neighbor
  gnn_sample s;
  s.num_nodes = 6;
  s.features.assign( 6 * node_feature_dim, 0.0 );
  for ( uint32_t n = 0; n < 6; ++n )
  {
    s.features[n * node_feature_dim + 4] = 1.0;
    s.features[n * node_feature_dim + 8] = 1.0;
  }
  for ( uint32_t n = 0; n < 6; ++n )
  {
    s.edges.push_back( { n, ( n + 1 ) % 6 } );
  }
  model_weights const m = init_model( model_task::fsa, 3, 8 );
  auto const [h_g, rows] = forward( m, s );
  for ( uint32_t r = 0; r < rows.rows; ++r )
  {
    for ( uint32_t c = 0; c < rows.cols; ++c )
    {
      CHECK( rows.at( r, c ) == Catch::Approx( h_g[c] ).margin( 1e-12 ) );
    }
  }
}

TEST_CASE( "all-zero weights give the normalization shift as embedding" )
{
  gnn_sample const s = toy_graph();
  model_weights m = init_model( model_task::fsa, 3, 8 );
  for ( uint32_t k = 0; k < 3; ++k )
  {
    m.w_pre[k].fill( 0.0 );
    m.w_suc[k].fill( 0.0 );
  }
  std::fill( m.bn_shift.begin(), m.bn_shift.end(), 0.75 );
  auto const [h_g, rows] = forward( m, s );
  (void)rows;
  for ( double v : h_g )
  {
    CHECK( v == Catch::Approx( 0.75 ).margin( 1e-9 ) );
  }
}

TEST_CASE( "graph embedding is invariant under node permutation" )
{
  gnn_sample const s = sample_from( { ppg_kind::simple, ppa_kind::dadda, fsa_kind::sklansky, 8 } );
  // permute node ids
  rng gen( 17 );
  std::vector<uint32_t> perm( s.num_nodes );
  for ( uint32_t i = 0; i < s.num_nodes; ++i )
  {
    perm[i] = i;
  }
  for ( uint32_t i = s.num_nodes - 1; i > 0; --i )
  {
    std::swap( perm[i], perm[gen.next_below( i + 1 )] );
  }
  gnn_sample p = s;
  for ( uint32_t n = 0; n < s.num_nodes; ++n )
  {
    for ( uint32_t c = 0; c < node_feature_dim; ++c )
    {
      p.features[perm[n] * node_feature_dim + c] = s.features[n * node_feature_dim + c];
    }
  }
  for ( auto& [u, v] : p.edges )
  {
    u = perm[u];
    v = perm[v];
  }
  model_weights const m = init_model( model_task::fsa, 7, 16 );
  auto const [ha, ra] = forward( m, s );
  auto const [hb, rb] = forward( m, p );
  (void)ra;
  (void)rb;
  for ( size_t c = 0; c < ha.size(); ++c )
  {
    CHECK( ha[c] == Catch::Approx( hb[c] ).margin( 1e-6 ) );
  }
}

TEST_CASE( "classification arithmetic with hand-set heads" )
{
  model_weights m = init_model( model_task::fsa, 1, 4 );
  for ( auto* w : { &m.w_topo, &m.w_nt, &m.w_tree } )
  {
    w->fill( 0.0 );
  }
  std::vector<double> const h_g( m.embed_dim(), 0.0 );
  graph_features g;
  g.f_level = 1.0;

  SECTION( "uniform heads and a forced tree topology" )
  {
    // a large logit difference through the normalized f_level input
    m.w_topo.at( 1, m.embed_dim() ) = 1000.0;
    m.w_topo.at( 0, m.embed_dim() ) = -1000.0;
    prediction const pred = classify( m, h_g, g );
    CHECK( pred.topo_probs[1] == Catch::Approx( 1.0 ) );
    for ( auto const& [cls, score] : pred.ranking )
    {
      if ( cls >= 4 )
      {
        CHECK( score == Catch::Approx( 0.2 ) );
      }
      else
      {
        CHECK( score == Catch::Approx( 0.0 ).margin( 1e-9 ) );
      }
    }
  }

  SECTION( "uniform everything gives 0.125 and 0.1" )
  {
    prediction const pred = classify( m, h_g, g );
    CHECK( pred.topo_probs[0] == Catch::Approx( 0.5 ) );
    double total = 0.0;
    for ( auto const& [cls, score] : pred.ranking )
    {
      CHECK( score == Catch::Approx( cls < 4 ? 0.125 : 0.1 ) );
      total += score;
    }
    CHECK( total == Catch::Approx( 1.0 ) );
  }
}

TEST_CASE( "joint scores always sum to one" )
{
  gnn_sample const s = sample_from( { ppg_kind::simple, ppa_kind::wallace, fsa_kind::kogge_stone, 8 } );
  model_weights const m = init_model( model_task::fsa, 21, 16 );
  prediction const pred = classify_sample( m, s );
  double total = 0.0;
  for ( auto const& [cls, score] : pred.ranking )
  {
    total += score;
  }
  CHECK( total == Catch::Approx( 1.0 ) );
}

TEST_CASE( "adding a constant to one head's logits keeps the ranking" )
{
  gnn_sample s = sample_from( { ppg_kind::simple, ppa_kind::dadda, fsa_kind::brent_kung, 8 } );
  model_weights m = init_model( model_task::fsa, 33, 8 );
  // force a known normalized value for f_fan so a weight-column shift adds a
  // constant to every logit of the non-tree head
  m.scalar_mean[1] = 0.0;
  m.scalar_std[1] = s.graph.f_fan;
  prediction const before = classify_sample( m, s );
  uint32_t const col = m.embed_dim(); // the f_fan slot of the subtype input
  for ( uint32_t r = 0; r < m.w_nt.rows; ++r )
  {
    m.w_nt.at( r, col ) += 3.5;
  }
  prediction const after = classify_sample( m, s );
  for ( size_t i = 0; i < before.ranking.size(); ++i )
  {
    CHECK( before.ranking[i].first == after.ranking[i].first );
    CHECK( before.ranking[i].second == Catch::Approx( after.ranking[i].second ).margin( 1e-9 ) );
  }
}

TEST_CASE( "gradients match central finite differences on a toy graph" )
{
  gnn_sample const toy = toy_graph();
  model_weights m = init_model( model_task::fsa, 11, 6 );
  std::vector<gnn_sample const*> const batch{ &toy };
  loss_options opt;
  opt.alpha = 0.7;

  auto loss_of = [&]( model_weights const& w ) {
    return loss_and_gradients( w, batch, opt ).loss;
  };
  auto const analytic = loss_and_gradients( m, batch, opt );

  double const eps = 1e-4;
  auto check_tensor = [&]( std::vector<double>& values, std::vector<double> const& grads,
                           char const* name ) {
    for ( size_t i = 0; i < values.size(); ++i )
    {
      double const keep = values[i];
      values[i] = keep + eps;
      double const up = loss_of( m );
      values[i] = keep - eps;
      double const down = loss_of( m );
      values[i] = keep;
      double const fd = ( up - down ) / ( 2 * eps );
      INFO( name << " entry " << i );
      CHECK( std::abs( fd - grads[i] ) <= 1e-4 * std::max( 1.0, std::abs( fd ) ) );
    }
  };
  for ( uint32_t k = 0; k < 3; ++k )
  {
    check_tensor( m.w_pre[k].data, analytic.grads.w_pre[k].data, "w_pre" );
    check_tensor( m.w_suc[k].data, analytic.grads.w_suc[k].data, "w_suc" );
  }
  check_tensor( m.bn_scale, analytic.grads.bn_scale, "bn_scale" );
  check_tensor( m.bn_shift, analytic.grads.bn_shift, "bn_shift" );
  check_tensor( m.w_topo.data, analytic.grads.w_topo.data, "w_topo" );
  check_tensor( m.w_nt.data, analytic.grads.w_nt.data, "w_nt" );
  check_tensor( m.w_tree.data, analytic.grads.w_tree.data, "w_tree" );
}

TEST_CASE( "subtype gradients route to exactly one head" )
{
  gnn_sample tree_sample = toy_graph(); // topo label 1
  gnn_sample nt_sample = toy_graph();
  nt_sample.topo_label = 0;
  nt_sample.subtype_label = 1;
  model_weights const m = init_model( model_task::fsa, 2, 6 );
  loss_options opt;
  opt.alpha = 1.0;
  opt.route_by_prediction = false; // ground-truth routing makes the head deterministic

  for ( gnn_sample const* s : { &tree_sample, &nt_sample } )
  {
    auto const res = loss_and_gradients( m, { s }, opt );
    double nt_norm = 0.0, tree_norm = 0.0;
    for ( double v : res.grads.w_nt.data )
    {
      nt_norm += v * v;
    }
    for ( double v : res.grads.w_tree.data )
    {
      tree_norm += v * v;
    }
    if ( s->topo_label == 1 )
    {
      CHECK( tree_norm > 0.0 );
      CHECK( nt_norm == 0.0 );
    }
    else
    {
      CHECK( nt_norm > 0.0 );
      CHECK( tree_norm == 0.0 );
    }
  }
}

TEST_CASE( "alpha zero reduces to the pure topology gradients" )
{
  gnn_sample const toy = toy_graph();
  model_weights const m = init_model( model_task::fsa, 2, 6 );
  loss_options zero;
  zero.alpha = 0.0;
  loss_options topo_only;
  topo_only.include_subtype = false;
  auto const a = loss_and_gradients( m, { &toy }, zero );
  auto const b = loss_and_gradients( m, { &toy }, topo_only );
  CHECK( a.loss == Catch::Approx( b.loss ) );
  for ( uint32_t k = 0; k < 3; ++k )
  {
    for ( size_t i = 0; i < a.grads.w_pre[k].data.size(); ++i )
    {
      CHECK( a.grads.w_pre[k].data[i] == Catch::Approx( b.grads.w_pre[k].data[i] ).margin( 1e-12 ) );
    }
  }
}

TEST_CASE( "near-perfect predictions give near-zero loss and gradients" )
{
  gnn_sample const toy = toy_graph(); // tree label, subtype 2
  model_weights m = init_model( model_task::fsa, 2, 6 );
  for ( auto* w : { &m.w_topo, &m.w_nt, &m.w_tree } )
  {
    w->fill( 0.0 );
  }
  // saturate the correct logits through the normalized f_level column
  m.scalar_mean[0] = 0.0;
  m.scalar_std[0] = toy.graph.f_level;
  m.w_topo.at( 1, m.embed_dim() ) = 200.0;
  m.w_topo.at( 0, m.embed_dim() ) = -200.0;
  m.scalar_mean[1] = 0.0;
  m.scalar_std[1] = toy.graph.f_fan;
  m.w_tree.at( 2, m.embed_dim() ) = 200.0;
  auto const res = loss_and_gradients( m, { &toy }, {} );
  CHECK( res.loss < 1e-9 );
  CHECK( res.grads.squared_norm() < 1e-9 );
}

TEST_CASE( "alpha calibration from squared norm streams" )
{
  std::vector<std::pair<double, double>> equal( 100, { 2.5, 2.5 } );
  auto const one = calibrate_alpha_from_norms( equal );
  CHECK( !one.degenerate );
  CHECK( one.alpha == Catch::Approx( 1.0 ).epsilon( 1e-9 ) );

  std::vector<std::pair<double, double>> scaled( 100, { 4.0, 1.0 } );
  auto const two = calibrate_alpha_from_norms( scaled );
  CHECK( two.alpha == Catch::Approx( 2.0 ).epsilon( 1e-6 ) );

  std::vector<std::pair<double, double>> degenerate( 100, { 1.0, 0.0 } );
  auto const fallback = calibrate_alpha_from_norms( degenerate );
  CHECK( fallback.degenerate );
  CHECK( fallback.alpha == 1.0 );
}

TEST_CASE( "alpha calibration on real batches is positive and finite" )
{
  std::vector<gnn_sample> samples;
  for ( auto fsa : { fsa_kind::ripple_carry, fsa_kind::kogge_stone } )
  {
    samples.push_back( sample_from( { ppg_kind::simple, ppa_kind::dadda, fsa, 6 } ) );
  }
  model_weights const m = init_model( model_task::fsa, 3, 8 );
  std::vector<std::vector<gnn_sample const*>> batches;
  for ( int i = 0; i < 3; ++i )
  {
    batches.push_back( { &samples[0], &samples[1] } );
  }
  auto const cal = calibrate_alpha( m, batches );
  CHECK( !cal.degenerate );
  CHECK( cal.alpha > 0.0 );
  CHECK( std::isfinite( cal.alpha ) );
}

TEST_CASE( "model save and load round-trips the forward outputs" )
{
  gnn_sample const s = sample_from( { ppg_kind::simple, ppa_kind::wallace, fsa_kind::han_carlson, 8 } );
  model_weights const m = init_model( model_task::fsa, 9, 16 );
  std::stringstream buffer;
  save_model( m, buffer );
  model_weights const loaded = load_model( buffer );
  auto const [ha, ra] = forward( m, s );
  auto const [hb, rb] = forward( loaded, s );
  (void)ra;
  (void)rb;
  for ( size_t c = 0; c < ha.size(); ++c )
  {
    CHECK( ha[c] == Catch::Approx( hb[c] ).margin( 1e-9 ) );
  }
}

TEST_CASE( "truncated or mismatched model files are rejected" )
{
  model_weights const m = init_model( model_task::ppa, 4, 8 );
  std::stringstream buffer;
  save_model( m, buffer );
  std::string const text = buffer.str();
  std::stringstream truncated( text.substr( 0, text.size() / 2 ) );
  CHECK_THROWS_AS( load_model( truncated ), std::runtime_error );
  std::stringstream wrong_version( "reveal-model 99\n" );
  CHECK_THROWS_AS( load_model( wrong_version ), std::runtime_error );
}

TEST_CASE( "training memorizes ten copies of one labeled cone" )
{
  gnn_sample const base =
      sample_from( { ppg_kind::simple, ppa_kind::dadda, fsa_kind::kogge_stone, 6 } );
  std::vector<gnn_sample> train_set( 10, base );
  train_config config;
  config.epochs = 60;
  config.hidden = 16;
  config.batch_size = 5;
  config.warmup_iters = 10;
  config.seed = 4;
  auto const result = train( model_task::fsa, train_set, {}, config );
  CHECK( result.best_validation_accuracy == 1.0 );
  CHECK( result.last_epoch_loss < result.first_epoch_loss );
}

TEST_CASE( "training is deterministic for a fixed seed" )
{
  std::vector<gnn_sample> train_set;
  for ( auto fsa : { fsa_kind::ripple_carry, fsa_kind::brent_kung, fsa_kind::sklansky } )
  {
    train_set.push_back( sample_from( { ppg_kind::simple, ppa_kind::wallace, fsa, 6 } ) );
  }
  train_config config;
  config.epochs = 3;
  config.hidden = 8;
  config.warmup_iters = 2;
  config.seed = 11;
  auto const a = train( model_task::fsa, train_set, {}, config );
  auto const b = train( model_task::fsa, train_set, {}, config );
  std::stringstream sa, sb;
  save_model( a.weights, sa );
  save_model( b.weights, sb );
  CHECK( sa.str() == sb.str() );
}

TEST_CASE( "a model trained at small widths runs on a wider cone" )
{
  std::vector<gnn_sample> train_set;
  for ( auto fsa : { fsa_kind::ripple_carry, fsa_kind::kogge_stone } )
  {
    train_set.push_back( sample_from( { ppg_kind::simple, ppa_kind::dadda, fsa, 6 } ) );
  }
  train_config config;
  config.epochs = 2;
  config.hidden = 8;
  config.warmup_iters = 1;
  auto const result = train( model_task::fsa, train_set, {}, config );
  gnn_sample const wide =
      sample_from( { ppg_kind::simple, ppa_kind::dadda, fsa_kind::kogge_stone, 24 } );
  prediction const pred = classify_sample( result.weights, wide );
  CHECK( pred.ranking.size() == 9u );
}
