from blindeq.main import main

raise SystemExit(main())
