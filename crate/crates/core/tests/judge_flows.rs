use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use relaynet::commitments::{mcom_gen, pomm_gen, MaskCommitment, PomError};
use relaynet::crypto::{commit, hash, KeyPair, Secret, SymKey};
use relaynet::judge::{EnforcementChallenge, Judge, JudgeConfig, JudgeError, JudgeOp};
use relaynet::payment::ack_receipt;
use relaynet::pcn::Ledger;
use relaynet::{Directory, PartyId};

const B_MAX: u64 = 1000;

struct World {
    rng: ChaCha20Rng,
    judge: Judge,
    ledger: Ledger,
    dir: Directory,
    keys: Vec<KeyPair>,
}

/// Parties 0..n, each with a registered key and `B_MAX` on the ledger.
fn world(n: u32, cfg: JudgeConfig) -> World {
    let mut rng = ChaCha20Rng::seed_from_u64(17);
    let mut ledger = Ledger::new();
    let mut dir = Directory::new();
    let keys: Vec<KeyPair> = (0..n).map(|_| KeyPair::generate(&mut rng)).collect();
    for (i, k) in keys.iter().enumerate() {
        dir.insert(PartyId(i as u32), k.public().clone());
        ledger.credit(PartyId(i as u32), B_MAX);
    }
    World {
        rng,
        judge: Judge::new(cfg),
        ledger,
        dir,
        keys,
    }
}

#[test]
fn registration_rules() {
    let mut w = world(2, JudgeConfig::new(B_MAX));
    let root = hash(b"content");
    let poor = PartyId(9);
    assert_eq!(w.judge.register(0, poor, root, 10, &w.ledger), Err(JudgeError::DepositTooLow));
    assert_eq!(w.judge.register(0, PartyId(1), root, B_MAX, &w.ledger), Err(JudgeError::PriceTooHigh));
    assert_eq!(w.judge.register(0, PartyId(1), root, 10, &w.ledger), Ok(()));
    assert_eq!(w.judge.register(1, PartyId(1), root, 10, &w.ledger), Err(JudgeError::AlreadyRegistered));
    assert_eq!(w.judge.registration(&root).unwrap().provider, PartyId(1));
    assert_eq!(w.judge.events().len(), 4);
}

fn bad_mask(w: &mut World, signer: usize) -> (MaskCommitment, Secret) {
    let sk = SymKey::generate(&mut w.rng);
    let s = Secret::random(&mut w.rng);
    let honest = mcom_gen(&sk, &s, &w.keys[signer], &mut w.rng);
    let mut ck = [0u8; 48];
    w.rng.fill_bytes(&mut ck);
    (MaskCommitment::sign(honest.h_sk, honest.h_s, ck, &w.keys[signer]), s)
}

#[test]
fn pomm_compensates_once() {
    let mut w = world(2, JudgeConfig::new(B_MAX));
    let (com, s) = bad_mask(&mut w, 1);
    let (tid, proof) = pomm_gen(&com, w.keys[1].public(), &s).unwrap();
    let (c, p) = (PartyId(0), PartyId(1));
    assert_eq!(w.judge.handle_pomm(5, c, &tid, &proof, &mut w.ledger, &w.dir), Ok(p));
    assert_eq!((w.ledger.balance(c), w.ledger.balance(p)), (2 * B_MAX, 0));
    assert_eq!(
        w.judge.handle_pomm(6, c, &tid, &proof, &mut w.ledger, &w.dir),
        Err(JudgeError::Replay)
    );
}

#[test]
fn pomm_against_the_wrong_key_is_rejected() {
    let mut w = world(3, JudgeConfig::new(B_MAX));
    let (com, s) = bad_mask(&mut w, 1);
    let (_, proof) = pomm_gen(&com, w.keys[1].public(), &s).unwrap();
    let framed = w.keys[2].public().clone();
    assert_eq!(
        w.judge.handle_pomm(5, PartyId(0), &framed, &proof, &mut w.ledger, &w.dir),
        Err(JudgeError::InvalidProof)
    );
    assert_eq!(w.ledger.balance(PartyId(2)), B_MAX);
}

#[test]
fn honest_masks_admit_no_proof() {
    let mut w = world(2, JudgeConfig::new(B_MAX));
    let sk = SymKey::generate(&mut w.rng);
    let s = Secret::random(&mut w.rng);
    let com = mcom_gen(&sk, &s, &w.keys[1], &mut w.rng);
    assert_eq!(pomm_gen(&com, w.keys[1].public(), &s).unwrap_err(), PomError::CommitterHonest);
    let other = Secret::random(&mut w.rng);
    assert_eq!(pomm_gen(&com, w.keys[1].public(), &other).unwrap_err(), PomError::SecretMismatch);
}

#[test]
fn slashing_burns_on_top_of_compensation() {
    let mut cfg = JudgeConfig::new(B_MAX);
    cfg.slash_bps = 2500;
    let mut w = world(2, cfg);
    w.ledger.credit(PartyId(1), 250);
    let (com, s) = bad_mask(&mut w, 1);
    let (tid, proof) = pomm_gen(&com, w.keys[1].public(), &s).unwrap();
    w.judge.handle_pomm(5, PartyId(0), &tid, &proof, &mut w.ledger, &w.dir).unwrap();
    assert_eq!(w.ledger.balance(PartyId(1)), 0);
    assert_eq!(w.ledger.balance(PartyId::BURN), 250);
}

/// Payer is party 0, hops are parties 1..=n.
struct Enforcement {
    w: World,
    ch: EnforcementChallenge,
    secrets: Vec<Secret>,
    sync: Secret,
}

fn enforcement(n: usize) -> Enforcement {
    let mut w = world(n as u32 + 1, JudgeConfig::new(B_MAX));
    let secrets: Vec<Secret> = (0..n).map(|_| Secret::random(&mut w.rng)).collect();
    let sync = Secret::random(&mut w.rng);
    let ch = EnforcementChallenge {
        deadline: 50,
        hashes: secrets.iter().map(|s| commit(&s.0, &mut w.rng)).collect(),
        sync_hash: commit(&sync.0, &mut w.rng),
        addresses: w.keys.iter().map(|k| k.public().clone()).collect(),
    };
    Enforcement { w, ch, secrets, sync }
}

impl Enforcement {
    fn receipts(&self) -> Vec<relaynet::crypto::Signature> {
        self.w.keys[1..].iter().map(|k| ack_receipt(k, &self.ch)).collect()
    }

    fn open(&mut self, now: u64) -> relaynet::crypto::Digest {
        let receipts = self.receipts();
        self.w
            .judge
            .enforce(now, PartyId(0), &self.ch, &receipts, &self.sync, &self.w.dir)
            .unwrap()
    }

    fn log(&mut self, now: u64, id: &relaynet::crypto::Digest, hop: usize) -> Result<Vec<Secret>, JudgeError> {
        let s = self.secrets[hop - 1];
        self.w.judge.log_response(now, PartyId(hop as u32), id, hop, &s, &self.w.dir)
    }
}

#[test]
fn enforce_checks_sync_secret_and_receipts() {
    let mut e = enforcement(3);
    let mut receipts = e.receipts();
    let wrong = Secret::random(&mut e.w.rng);
    let j = &mut e.w.judge;
    assert_eq!(
        j.enforce(10, PartyId(0), &e.ch, &receipts, &wrong, &e.w.dir),
        Err(JudgeError::BadSyncSecret)
    );
    assert_eq!(
        j.enforce(10, PartyId(2), &e.ch, &receipts, &e.sync, &e.w.dir),
        Err(JudgeError::WrongCaller)
    );
    receipts.swap(0, 1);
    assert_eq!(
        j.enforce(10, PartyId(0), &e.ch, &receipts, &e.sync, &e.w.dir),
        Err(JudgeError::BadReceipt(1))
    );
    receipts.swap(0, 1);
    assert_eq!(
        j.enforce(50, PartyId(0), &e.ch, &receipts, &e.sync, &e.w.dir),
        Err(JudgeError::OutsideWindow)
    );
    assert!(j.enforce(10, PartyId(0), &e.ch, &receipts, &e.sync, &e.w.dir).is_ok());
    assert_eq!(
        j.enforce(11, PartyId(0), &e.ch, &receipts, &e.sync, &e.w.dir),
        Err(JudgeError::AlreadyEnforced)
    );
}

#[test]
fn logs_run_from_the_last_hop_in_fixed_windows() {
    let mut e = enforcement(3);
    let id = e.open(10);
    // Hop 3 logs at 11, hop 2 at 12, hop 1 at 13.
    assert_eq!(e.log(11, &id, 2), Err(JudgeError::OutsideWindow));
    assert_eq!(e.log(12, &id, 2), Err(JudgeError::DownstreamMissing));
    assert_eq!(e.log(11, &id, 3).unwrap(), vec![e.secrets[2]]);
    assert_eq!(e.log(11, &id, 3), Err(JudgeError::AlreadyLogged));
    let wrong = Secret::random(&mut e.w.rng);
    assert_eq!(
        e.w.judge.log_response(12, PartyId(2), &id, 2, &wrong, &e.w.dir),
        Err(JudgeError::BadSecret)
    );
    assert_eq!(e.log(12, &id, 2).unwrap(), e.secrets[1..].to_vec());
    assert_eq!(e.log(13, &id, 1).unwrap(), e.secrets);

    let d = &e.w.dir;
    assert_eq!(e.w.judge.punish(13, PartyId(0), &id, &mut e.w.ledger, d), Err(JudgeError::OutsideWindow));
    assert_eq!(e.w.judge.punish(14, PartyId(0), &id, &mut e.w.ledger, d), Ok(None));
    assert_eq!(e.w.judge.punish(14, PartyId(0), &id, &mut e.w.ledger, d), Err(JudgeError::AlreadySettled));
}

#[test]
fn punishment_hits_the_highest_silent_hop() {
    let mut e = enforcement(4);
    let id = e.open(20);
    e.log(21, &id, 4).unwrap();
    // Hop 3 stays silent, so hops 2 and 1 cannot log either.
    assert_eq!(e.log(23, &id, 2), Err(JudgeError::DownstreamMissing));
    let punished = e.w.judge.punish(25, PartyId(0), &id, &mut e.w.ledger, &e.w.dir).unwrap();
    assert_eq!(punished, Some(PartyId(3)));
    assert_eq!(e.w.ledger.balance(PartyId(3)), 0);
    assert_eq!(e.w.ledger.balance(PartyId(0)), 2 * B_MAX);
    let ops: Vec<JudgeOp> = e.w.judge.events().iter().map(|ev| ev.op).collect();
    assert_eq!(ops, [JudgeOp::Enforce, JudgeOp::Log, JudgeOp::Log, JudgeOp::Punish]);
}
