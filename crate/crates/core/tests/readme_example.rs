use peerfx::dgp::{generate, ScenarioSpec};
use peerfx::graph::row_normalize;
use peerfx::network::spectral_embed;
use peerfx::peer::{adjusted_2sls, MsarData};
use peerfx::sieve::{build_basis, SieveSpec};

#[test]
fn readme_pipeline_runs() -> peerfx::Result<()> {
    let sc = ScenarioSpec { n: Some(300), seed: Some(1), ..Default::default() }.resolve()?;
    let draw = generate(&sc, 0)?;
    let u_hat = spectral_embed(&draw.graph, 2)?.u_hat;
    let design = build_basis(&u_hat, &SieveSpec::default())?;
    let data = MsarData::new(draw.data.y.clone(), draw.data.x.clone(), row_normalize(&draw.graph))?;
    let fit = adjusted_2sls(&data, &design)?;
    assert_eq!(fit.d_hat.shape(), (2, 2));
    assert!(fit.d_hat.iter().all(|v| v.is_finite()));
    Ok(())
}
