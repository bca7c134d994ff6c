use std::fs;

use lexalign::constraint::ConstraintSet;
use lexalign::pipeline::simplify;
use lexalign::policy::PolicyModel;
use lexalign::reward::RankerModel;
use lexalign::toy::ToyEnvironment;
use lexalign::trainer::train;
use lexalign::Band;

#[test]
fn trained_artifacts_survive_a_save_load_cycle() {
    let env = ToyEnvironment::canonical().unwrap();
    let (reference, _) = env.pretrain().unwrap();
    let rankers = env.train_rankers().unwrap();
    let mut cfg = env.settings.train;
    cfg.ppo.epochs = 2;
    cfg.ppo.rollouts_per_epoch = 16;
    let outcome = train(&reference, &[Band::B], &env.envs(&rankers), &env.train_prompts(), &cfg).unwrap();
    assert_eq!(outcome.logs.len(), 1);

    let dir = tempfile::tempdir().unwrap();
    let ckpt = dir.path().join("policy.ckpt");
    outcome.model.save(&ckpt).unwrap();
    let loaded = PolicyModel::load(&ckpt).unwrap();
    let again = dir.path().join("again.ckpt");
    loaded.save(&again).unwrap();
    assert_eq!(fs::read(&ckpt).unwrap(), fs::read(&again).unwrap());

    let sentences = env.eval_sentences();
    let generation = cfg.generation;
    assert_eq!(
        simplify(&outcome.model, Band::B, &sentences, &generation).unwrap(),
        simplify(&loaded, Band::B, &sentences, &generation).unwrap()
    );

    let ranker_path = dir.path().join("B.ranker");
    rankers[&Band::B].save(&ranker_path).unwrap();
    let ranker = RankerModel::load(&ranker_path, env.extractor()).unwrap();
    for s in &sentences {
        assert_eq!(ranker.score(s), rankers[&Band::B].score(s));
    }

    let set_path = dir.path().join("B.cset");
    env.sets[&Band::B].save(&set_path).unwrap();
    let set = ConstraintSet::load(&set_path).unwrap();
    assert_eq!(set.band(), Band::B);
    assert_eq!(set.m(), env.sets[&Band::B].m());
}
